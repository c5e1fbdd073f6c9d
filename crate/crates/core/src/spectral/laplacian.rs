//! Degree-normalized adjacency operators.
//!
//! The square operator is `L = D^{-1/2} A D^{-1/2}` with `D` the diagonal
//! degree matrix. The rectangular variant normalizes a sub-adjacency block
//! by its row sums on the left and its column sums on the right:
//! `L = D^{-1/2} A F^{-1/2}`. Zero-degree rows or columns would divide by
//! zero; their entries are defined as zero and the offending indices are
//! reported to the caller.

use crate::graph::SparseGraph;
use crate::sparse::CsrMatrix;

/// Zero-degree bookkeeping for a rectangular Laplacian.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DegenerateAxes {
    /// Rows whose sum was zero.
    pub zero_rows: Vec<usize>,
    /// Columns whose sum was zero.
    pub zero_cols: Vec<usize>,
}

/// Symmetric normalized adjacency `D^{-1/2} A D^{-1/2}` of a graph.
///
/// Returns the operator and the list of isolated nodes (zero degree); their
/// rows and columns are entirely zero.
pub fn laplacian_square(graph: &SparseGraph) -> (CsrMatrix, Vec<usize>) {
    let n = graph.num_nodes();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|u| {
            let d = graph.degree(u);
            if d == 0 {
                0.0
            } else {
                1.0 / (d as f64).sqrt()
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(n);
    for u in 0..n {
        let row: Vec<(usize, f64)> = graph
            .neighbors(u)
            .iter()
            .map(|&v| (v, inv_sqrt[u] * inv_sqrt[v]))
            .collect();
        rows.push(row);
    }
    let l = CsrMatrix::from_rows(n, rows).expect("graph rows are sorted and in range");
    (l, graph.isolated_nodes())
}

/// Row/column-normalized rectangular operator `D^{-1/2} A F^{-1/2}`,
/// where `D` holds row sums of `a` and `F` column sums.
pub fn laplacian_rect(a: &CsrMatrix) -> (CsrMatrix, DegenerateAxes) {
    let row_sums = a.row_sums();
    let col_sums = a.col_sums();
    let mut degenerate = DegenerateAxes::default();
    let inv_sqrt = |s: f64| if s > 0.0 { 1.0 / s.sqrt() } else { 0.0 };
    let row_scale: Vec<f64> = row_sums.iter().map(|&s| inv_sqrt(s)).collect();
    let col_scale: Vec<f64> = col_sums.iter().map(|&s| inv_sqrt(s)).collect();
    for (i, &s) in row_sums.iter().enumerate() {
        if s == 0.0 {
            degenerate.zero_rows.push(i);
        }
    }
    for (j, &s) in col_sums.iter().enumerate() {
        if s == 0.0 {
            degenerate.zero_cols.push(j);
        }
    }
    let mut rows = Vec::with_capacity(a.nrows());
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        let row: Vec<(usize, f64)> = cols
            .iter()
            .zip(vals)
            .map(|(&j, &v)| (j, v * row_scale[i] * col_scale[j]))
            .collect();
        rows.push(row);
    }
    let l = CsrMatrix::from_rows(a.ncols(), rows).expect("input rows are sorted and in range");
    (l, degenerate)
}
