//! Worker-side stage: rectangular embedding of the sub-adjacency and
//! one-shot label assignment against the broadcast pseudo-centers.
//!
//! A worker never iterates: it embeds its `(l + n_m) x l` block, looks up the
//! `k` pseudo-center rows among the first `l`, and labels each local node by
//! its nearest center row. No clustering state ever flows back to the master
//! beyond the labels themselves.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::spectral::{gram_svd, laplacian_rect};

pub use crate::population::embed_population;

/// Everything a worker needs: its id, the pilot/local node ids, and the
/// rectangular sub-adjacency whose rows are pilots-then-locals and whose
/// columns are the pilots.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerTask {
    pub worker_id: usize,
    /// Global ids of the pilot nodes (sorted ascending; defines the column
    /// order and the first `l` rows).
    pub pilot_indices: Vec<usize>,
    /// Global ids of this worker's own nodes, in row order (distinct, any
    /// order; rows `l..` follow this order).
    pub local_indices: Vec<usize>,
    /// `(l + n_m) x l` adjacency block with entries 1.0; the leading
    /// `l x l` block is the pilot graph itself.
    pub sub_adjacency: CsrMatrix,
}

impl WorkerTask {
    pub fn num_pilots(&self) -> usize {
        self.pilot_indices.len()
    }

    pub fn num_locals(&self) -> usize {
        self.local_indices.len()
    }

    /// Checks the structural contract: sorted distinct pilots, distinct
    /// locals, disjointness, matching matrix shape, and a symmetric,
    /// loop-free leading pilot block.
    pub fn validate(&self) -> Result<()> {
        let l = self.pilot_indices.len();
        let n = self.local_indices.len();
        if l == 0 {
            return Err(Error::InvalidParameter(
                "worker task has no pilot columns".into(),
            ));
        }
        for w in self.pilot_indices.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter(
                    "pilot indices must be sorted and distinct".into(),
                ));
            }
        }
        let mut sorted_locals = self.local_indices.clone();
        sorted_locals.sort_unstable();
        for w in sorted_locals.windows(2) {
            if w[1] == w[0] {
                return Err(Error::InvalidParameter(format!(
                    "duplicate local node {}",
                    w[0]
                )));
            }
        }
        // Both lists are now sorted: a single merge pass finds overlaps.
        let (mut i, mut j) = (0, 0);
        while i < l && j < n {
            match self.pilot_indices[i].cmp(&sorted_locals[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    return Err(Error::InvalidParameter(format!(
                        "node {} is both pilot and local",
                        sorted_locals[j]
                    )));
                }
            }
        }
        if self.sub_adjacency.nrows() != l + n || self.sub_adjacency.ncols() != l {
            return Err(Error::ShapeMismatch {
                expected: format!("{} x {l} sub-adjacency", l + n),
                got: format!("{} x {}", self.sub_adjacency.nrows(), self.sub_adjacency.ncols()),
            });
        }
        for i in 0..l {
            let (cols, _) = self.sub_adjacency.row(i);
            for &j in cols {
                if j == i {
                    return Err(Error::InvalidParameter(format!(
                        "pilot block has a self-loop at {i}"
                    )));
                }
                if self.sub_adjacency.get(j, i) == 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "pilot block is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A worker's answer: labels for its local nodes plus flags for the nodes it
/// could not meaningfully place.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerResult {
    pub worker_id: usize,
    /// Cluster label (`0..k`) of each local node, in `local_indices` order.
    pub labels: Vec<usize>,
    /// Global ids of local nodes with no pilot connections. Their embedding
    /// row is exactly zero, so they are assigned label 0 by convention and
    /// listed here rather than silently dropped.
    pub degenerate_nodes: Vec<usize>,
    /// `(l + n_m) x k` left singular vectors, retained only on request
    /// (estimation-error metrics need them; label assignment does not).
    pub left_singular: Option<Array2<f64>>,
}

/// Labels every row of an embedding by its nearest representative row:
/// row `r` gets the label `c` minimizing `‖U_r − U_{centers[c]}‖²`, ties to
/// the smallest `c`.
pub fn assign_to_centers(embedding: &Array2<f64>, center_positions: &[usize]) -> Result<Vec<usize>> {
    for &p in center_positions {
        if p >= embedding.nrows() {
            return Err(Error::InvalidCenters {
                index: p,
                l: embedding.nrows(),
            });
        }
    }
    if center_positions.is_empty() {
        return Err(Error::InvalidParameter("no center rows given".into()));
    }
    let dim = embedding.ncols();
    let mut out = Vec::with_capacity(embedding.nrows());
    for r in 0..embedding.nrows() {
        let mut best_c = 0usize;
        let mut best_d = f64::INFINITY;
        for (c, &p) in center_positions.iter().enumerate() {
            let mut d2 = 0.0;
            for j in 0..dim {
                let t = embedding[[r, j]] - embedding[[p, j]];
                d2 += t * t;
            }
            if d2 < best_d {
                best_d = d2;
                best_c = c;
            }
        }
        out.push(best_c);
    }
    Ok(out)
}

/// Runs detection on one worker: rectangular Laplacian, truncated SVD via
/// the Gram route, then nearest-pseudo-center assignment of the local rows.
///
/// `center_positions` are the broadcast pseudo-center positions within the
/// pilot set — the only master output a worker ever sees. Label `c` means
/// "nearest to the `c`-th pseudo center", which by the master's construction
/// is cluster `c`. Locals without any pilot connection embed at zero; they
/// get label 0 and are reported in `degenerate_nodes`.
pub fn worker_detect(
    task: &WorkerTask,
    center_positions: &[usize],
    k: usize,
    keep_embedding: bool,
) -> Result<WorkerResult> {
    task.validate()?;
    let l = task.num_pilots();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if center_positions.len() != k {
        return Err(Error::ShapeMismatch {
            expected: format!("{k} pseudo centers"),
            got: format!("{}", center_positions.len()),
        });
    }
    let mut seen = vec![false; l];
    for &p in center_positions {
        if p >= l {
            return Err(Error::InvalidCenters { index: p, l });
        }
        if seen[p] {
            return Err(Error::InvalidParameter(format!(
                "pseudo-center position {p} appears twice"
            )));
        }
        seen[p] = true;
    }
    let (lap, axes) = laplacian_rect(&task.sub_adjacency);
    let svd = gram_svd(&lap, k)?;
    let assigned = assign_to_centers(&svd.left, center_positions)?;
    let mut labels = assigned[l..].to_vec();
    let mut degenerate = Vec::new();
    for &r in &axes.zero_rows {
        if r >= l {
            labels[r - l] = 0;
            degenerate.push(task.local_indices[r - l]);
        }
    }
    degenerate.sort_unstable();
    Ok(WorkerResult {
        worker_id: task.worker_id,
        labels,
        degenerate_nodes: degenerate,
        left_singular: keep_embedding.then_some(svd.left),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SparseGraph;

    /// Two disjoint 4-cliques; pilots are two nodes of each.
    fn clique_task() -> WorkerTask {
        let mut edges = Vec::new();
        for c in [0usize, 4] {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    edges.push((c + i, c + j));
                }
            }
        }
        let g = SparseGraph::from_edges(8, &edges).unwrap().0;
        let pilots = vec![0, 1, 4, 5];
        let locals = vec![2, 3, 6, 7];
        let rows: Vec<usize> = pilots.iter().chain(locals.iter()).copied().collect();
        let sub = g.adjacency_block(&rows, &pilots).unwrap();
        WorkerTask {
            worker_id: 0,
            pilot_indices: pilots,
            local_indices: locals,
            sub_adjacency: sub,
        }
    }

    #[test]
    fn labels_follow_clique_structure() {
        let task = clique_task();
        // Centers: pilot 0 (first clique) and pilot 4 (position 2).
        let result = worker_detect(&task, &[0, 2], 2, false).unwrap();
        assert_eq!(result.labels, vec![0, 0, 1, 1]);
        assert!(result.degenerate_nodes.is_empty());
        assert!(result.left_singular.is_none());
    }

    #[test]
    fn pilot_only_worker_returns_empty_labels() {
        let mut task = clique_task();
        task.local_indices.clear();
        let g = SparseGraph::from_edges(
            8,
            &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (4, 5), (4, 6), (4, 7), (5, 6), (5, 7), (6, 7)],
        )
        .unwrap()
        .0;
        task.sub_adjacency = g.adjacency_block(&[0, 1, 4, 5], &[0, 1, 4, 5]).unwrap();
        let result = worker_detect(&task, &[0, 2], 2, true).unwrap();
        assert!(result.labels.is_empty());
        assert_eq!(result.left_singular.unwrap().dim(), (4, 2));
    }

    #[test]
    fn zero_pilot_connectivity_is_flagged_and_labeled_zero() {
        // Node 3 touches only node 2, which is not a pilot: its row is zero.
        let g = SparseGraph::from_edges(4, &[(0, 1), (0, 2), (2, 3)]).unwrap().0;
        let sub = g.adjacency_block(&[0, 1, 2, 3], &[0, 1]).unwrap();
        let task = WorkerTask {
            worker_id: 1,
            pilot_indices: vec![0, 1],
            local_indices: vec![2, 3],
            sub_adjacency: sub,
        };
        let result = worker_detect(&task, &[0, 1], 2, false).unwrap();
        assert_eq!(result.degenerate_nodes, vec![3]);
        assert_eq!(result.labels[1], 0);
    }

    #[test]
    fn rejects_center_positions_outside_pilot_range() {
        let task = clique_task();
        let err = worker_detect(&task, &[0, 4], 2, false).unwrap_err();
        assert!(matches!(err, Error::InvalidCenters { index: 4, l: 4 }));
        let err = worker_detect(&task, &[1, 1], 2, false).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn validate_catches_structural_breakage() {
        let mut task = clique_task();
        task.local_indices[0] = 0; // collides with a pilot
        assert!(task.validate().is_err());

        let mut task = clique_task();
        task.local_indices.pop();
        assert!(matches!(
            task.validate(),
            Err(Error::ShapeMismatch { .. })
        ));

        let mut task = clique_task();
        task.pilot_indices = vec![1, 0, 4, 5];
        assert!(task.validate().is_err());
    }

    #[test]
    fn local_row_order_only_permutes_labels() {
        let g = SparseGraph::from_edges(
            6,
            &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (0, 3)],
        )
        .unwrap()
        .0;
        let pilots = vec![0, 1, 3, 4];
        let forward = vec![2, 5];
        let backward = vec![5, 2];
        let make = |locals: &[usize]| {
            let rows: Vec<usize> = pilots.iter().chain(locals.iter()).copied().collect();
            WorkerTask {
                worker_id: 0,
                pilot_indices: pilots.clone(),
                local_indices: locals.to_vec(),
                sub_adjacency: g.adjacency_block(&rows, &pilots).unwrap(),
            }
        };
        let a = worker_detect(&make(&forward), &[0, 2], 2, false).unwrap();
        let b = worker_detect(&make(&backward), &[0, 2], 2, false).unwrap();
        assert_eq!(a.labels[0], b.labels[1]);
        assert_eq!(a.labels[1], b.labels[0]);
    }
}
