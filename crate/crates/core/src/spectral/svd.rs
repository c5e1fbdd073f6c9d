//! Truncated SVD of tall sparse matrices via the Gram trick.
//!
//! For an `n x l` operator with `n >= l`, the top-k singular triples are
//! obtained from the dense eigendecomposition of the small Gram matrix
//! `G = LᵀL` (cost `O(l³)` plus one sparse pass), then lifted back:
//! `v_k` = eigenvector of `G`, `sigma_k = sqrt(lambda_k)`,
//! `u_k = L v_k / sigma_k`. This avoids ever densifying the tall side.

use crate::error::{Error, Result};
use crate::linalg;
use crate::sparse::CsrMatrix;
use ndarray::Array2;

/// Relative cutoff under which trailing singular values count as zero:
/// requesting k values below `TOL_SIGMA_REL * sigma_1` is a rank failure.
pub const TOL_SIGMA_REL: f64 = 1e-8;

/// A truncated singular value decomposition `L ≈ U diag(s) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdTriple {
    /// `n x k` left singular vectors, orthonormal columns.
    pub left: Array2<f64>,
    /// Descending, strictly positive singular values.
    pub singular: Vec<f64>,
    /// `l x k` right singular vectors, orthonormal columns.
    pub right: Array2<f64>,
}

/// Top-k singular triples of a sparse matrix through the Gram route.
///
/// Errors with [`Error::RankDeficient`] when the matrix cannot support `k`
/// singular values above the relative threshold, instead of returning
/// meaningless directions.
pub fn gram_svd(l: &CsrMatrix, k: usize) -> Result<SvdTriple> {
    let (n, cols) = (l.nrows(), l.ncols());
    if k == 0 || k > cols.min(n) {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must lie in 1..={}",
            cols.min(n)
        )));
    }

    // Gram matrix G = LᵀL accumulated row by row (each sparse row
    // contributes the outer product of its nonzeros).
    let mut g = Array2::zeros((cols, cols));
    for i in 0..n {
        let (cidx, vals) = l.row(i);
        for (a, &ca) in cidx.iter().enumerate() {
            let va = vals[a];
            for (b, &cb) in cidx.iter().enumerate().skip(a) {
                g[[ca, cb]] += va * vals[b];
            }
        }
    }
    for a in 0..cols {
        for b in (a + 1)..cols {
            g[[b, a]] = g[[a, b]];
        }
    }

    let (eigvals, eigvecs) = linalg::eigh(&g)?;
    // Eigenvalues of a Gram matrix are non-negative up to roundoff; take the
    // k largest (they sit at the end of the ascending ordering).
    let sigma_1 = eigvals.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    let threshold = TOL_SIGMA_REL * sigma_1;
    let mut singular = Vec::with_capacity(k);
    let mut right = Array2::zeros((cols, k));
    for j in 0..k {
        let src = cols - 1 - j;
        let sigma = eigvals[src].max(0.0).sqrt();
        if sigma <= threshold {
            return Err(Error::RankDeficient {
                index: j,
                value: sigma,
                threshold,
            });
        }
        singular.push(sigma);
        for i in 0..cols {
            right[[i, j]] = eigvecs[[i, src]];
        }
    }

    // Lift: u_j = L v_j / sigma_j.
    let mut left = Array2::zeros((n, k));
    for i in 0..n {
        let (cidx, vals) = l.row(i);
        for j in 0..k {
            let mut acc = 0.0;
            for (&c, &v) in cidx.iter().zip(vals) {
                acc += v * right[[c, j]];
            }
            left[[i, j]] = acc / singular[j];
        }
    }

    // Certify the factorization: || L v_j - sigma_j u_j || per column.
    for j in 0..k {
        let mut err = 0.0;
        for i in 0..n {
            let (cidx, vals) = l.row(i);
            let mut lv = 0.0;
            for (&c, &v) in cidx.iter().zip(vals) {
                lv += v * right[[c, j]];
            }
            let d = lv - singular[j] * left[[i, j]];
            err += d * d;
        }
        if err.sqrt() > 1e-6 {
            return Err(Error::NonConvergence(format!(
                "gram svd column {j} residual {:.3e}",
                err.sqrt()
            )));
        }
    }

    Ok(SvdTriple {
        left,
        singular,
        right,
    })
}
