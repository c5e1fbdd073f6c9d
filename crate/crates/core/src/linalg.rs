//! Dense kernels: symmetric eigendecomposition and singular value
//! decomposition, wrapped so the rest of the crate only handles
//! `ndarray::Array2<f64>`.

use crate::error::{Error, Result};
use faer::Mat;
use ndarray::Array2;

fn to_faer(a: &Array2<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in ascending order with matching orthonormal
/// eigenvector columns. The input is referenced by its lower triangle.
pub fn eigh(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::ShapeMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    let m = to_faer(a);
    let eig = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::NonConvergence(format!("symmetric eigendecomposition: {e:?}")))?;
    let s = eig.S();
    let u = eig.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].partial_cmp(&s[j]).expect("eigenvalues are finite"));
    let values: Vec<f64> = order.iter().map(|&i| s[i]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(i, j)| u[(i, order[j])]);
    Ok((values, vectors))
}

/// Thin singular value decomposition `A = U diag(s) Vᵀ`.
///
/// Returns `(U, s, V)` with singular values in descending order,
/// `U: m x r`, `V: n x r`, `r = min(m, n)`.
pub fn svd(a: &Array2<f64>) -> Result<(Array2<f64>, Vec<f64>, Array2<f64>)> {
    let (m, n) = a.dim();
    let r = m.min(n);
    let fa = to_faer(a);
    let dec = fa
        .thin_svd()
        .map_err(|e| Error::NonConvergence(format!("svd: {e:?}")))?;
    let s_diag = dec.S();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| {
        s_diag[j]
            .partial_cmp(&s_diag[i])
            .expect("singular values are finite")
    });
    let s: Vec<f64> = order.iter().map(|&i| s_diag[i]).collect();
    let u_full = dec.U();
    let v_full = dec.V();
    let u = Array2::from_shape_fn((m, r), |(i, j)| u_full[(i, order[j])]);
    let v = Array2::from_shape_fn((n, r), |(i, j)| v_full[(i, order[j])]);
    Ok((u, s, v))
}

/// Largest and smallest singular values of a dense matrix.
pub fn singular_extremes(a: &Array2<f64>) -> Result<(f64, f64)> {
    let (_, s, _) = svd(a)?;
    let max = s.first().copied().unwrap_or(0.0);
    let min = s.last().copied().unwrap_or(0.0);
    Ok((max, min))
}

/// Sines of the principal angles between the column spans of `a` and `b`
/// (both with orthonormal columns, same shape).
///
/// Computed as the singular values of `b - a (aᵀ b)`, which stays accurate
/// for the tiny angles where `acos` of a near-1 cosine loses precision.
pub fn principal_angle_sines(a: &Array2<f64>, b: &Array2<f64>) -> Result<Vec<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", a.nrows(), a.ncols()),
            got: format!("{}x{}", b.nrows(), b.ncols()),
        });
    }
    let residual = b - &a.dot(&a.t().dot(b));
    let (_, s, _) = svd(&residual)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn eigh_known_matrix() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let (vals, vecs) = eigh(&a).unwrap();
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-12);
        // Residual check A v = lambda v.
        for j in 0..2 {
            for i in 0..2 {
                let av: f64 = (0..2).map(|k| a[[i, k]] * vecs[[k, j]]).sum();
                assert_abs_diff_eq!(av, vals[j] * vecs[[i, j]], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn svd_reconstructs() {
        let a = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let (u, s, v) = svd(&a).unwrap();
        assert!(s[0] >= s[1]);
        for i in 0..3 {
            for j in 0..2 {
                let rec: f64 = (0..2).map(|k| u[[i, k]] * s[k] * v[[j, k]]).sum();
                assert_abs_diff_eq!(rec, a[[i, j]], epsilon = 1e-10);
            }
        }
    }
}
