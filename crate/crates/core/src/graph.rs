//! Undirected graphs in CSR form.
//!
//! A [`SparseGraph`] stores a simple undirected graph as a symmetric 0/1
//! adjacency pattern: no self-loops, both directions of every edge stored,
//! neighbor lists sorted. Node identifiers are `0..num_nodes`.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Symmetric adjacency structure of a simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
}

/// Counters describing what the edge-list builder had to clean up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// Self-loops dropped from the input.
    pub self_loops_dropped: usize,
    /// Duplicate undirected edges collapsed into one.
    pub duplicates_collapsed: usize,
}

impl SparseGraph {
    /// Builds a graph from an edge list; endpoints must be `< num_nodes`.
    ///
    /// The input may list an edge in either or both orientations and may
    /// contain repeats and self-loops; the result is the cleaned simple
    /// graph plus counters for what was dropped.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<(Self, BuildStats)> {
        let mut stats = BuildStats::default();
        let mut directed: Vec<(usize, usize)> = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) out of range for {num_nodes} nodes"
                )));
            }
            if u == v {
                stats.self_loops_dropped += 1;
                continue;
            }
            directed.push((u, v));
            directed.push((v, u));
        }
        directed.sort_unstable();
        let before = directed.len();
        directed.dedup();
        // Each duplicate undirected edge contributed two duplicate arcs.
        stats.duplicates_collapsed = (before - directed.len()) / 2;

        let mut row_offsets = vec![0usize; num_nodes + 1];
        for &(u, _) in &directed {
            row_offsets[u + 1] += 1;
        }
        for i in 0..num_nodes {
            row_offsets[i + 1] += row_offsets[i];
        }
        let col_indices = directed.into_iter().map(|(_, v)| v).collect();
        Ok((
            Self {
                num_nodes,
                row_offsets,
                col_indices,
            },
            stats,
        ))
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.col_indices.len() / 2
    }

    /// Sorted neighbor list of node `u`.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[u]..self.row_offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row_offsets[u + 1] - self.row_offsets[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Nodes with no incident edge.
    pub fn isolated_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes).filter(|&u| self.degree(u) == 0).collect()
    }

    /// The adjacency pattern as a valued CSR matrix (entries 1.0).
    pub fn to_csr(&self) -> CsrMatrix {
        CsrMatrix::new(
            self.num_nodes,
            self.num_nodes,
            self.row_offsets.clone(),
            self.col_indices.clone(),
            vec![1.0; self.col_indices.len()],
        )
        .expect("graph CSR structure is valid by construction")
    }

    /// Induced subgraph on `nodes`, which must be sorted and distinct.
    /// Node `nodes[i]` becomes node `i` of the subgraph.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<SparseGraph> {
        let position = position_map(self.num_nodes, nodes)?;
        let mut row_offsets = Vec::with_capacity(nodes.len() + 1);
        let mut col_indices = Vec::new();
        row_offsets.push(0);
        for &u in nodes {
            for &v in self.neighbors(u) {
                if let Some(p) = position[v] {
                    col_indices.push(p);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseGraph {
            num_nodes: nodes.len(),
            row_offsets,
            col_indices,
        })
    }

    /// Rectangular adjacency block: rows indexed by `rows`, columns by
    /// `cols` (both global node lists; `cols` sorted and distinct), entries
    /// 1.0 where the graph has an edge.
    pub fn adjacency_block(&self, rows: &[usize], cols: &[usize]) -> Result<CsrMatrix> {
        let position = position_map(self.num_nodes, cols)?;
        let mut out_rows = Vec::with_capacity(rows.len());
        for &u in rows {
            if u >= self.num_nodes {
                return Err(Error::InvalidParameter(format!(
                    "row node {u} out of range"
                )));
            }
            let mut row = Vec::new();
            for &v in self.neighbors(u) {
                if let Some(p) = position[v] {
                    row.push((p, 1.0));
                }
            }
            out_rows.push(row);
        }
        CsrMatrix::from_rows(cols.len(), out_rows)
    }
}

/// Maps global node id -> position within `nodes`, validating sortedness.
fn position_map(num_nodes: usize, nodes: &[usize]) -> Result<Vec<Option<usize>>> {
    let mut position = vec![None; num_nodes];
    let mut prev: Option<usize> = None;
    for (p, &u) in nodes.iter().enumerate() {
        if u >= num_nodes {
            return Err(Error::InvalidParameter(format!("node {u} out of range")));
        }
        if let Some(q) = prev {
            if u <= q {
                return Err(Error::InvalidParameter(
                    "node list must be sorted and distinct".into(),
                ));
            }
        }
        position[u] = Some(p);
        prev = Some(u);
    }
    Ok(position)
}
