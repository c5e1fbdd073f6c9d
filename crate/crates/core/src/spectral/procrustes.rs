//! Orthogonal Procrustes alignment.
//!
//! Given equal-shape matrices, finds the orthogonal `Q` minimizing
//! `||estimate - reference Q||_F`. Spectral embeddings are only defined up
//! to an orthogonal transform, so every comparison between two embeddings
//! goes through this alignment first.

use crate::error::{Error, Result};
use crate::linalg;
use ndarray::Array2;

/// Aligns `reference` onto `estimate`; returns the optimal orthogonal `Q`
/// (`d x d`) and the aligned residual `||estimate - reference Q||_F`.
///
/// Closed form: with `M = referenceᵀ estimate = W Σ Vᵀ`, the minimizer is
/// `Q = W Vᵀ`.
pub fn procrustes_align(estimate: &Array2<f64>, reference: &Array2<f64>) -> Result<(Array2<f64>, f64)> {
    if estimate.dim() != reference.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", reference.nrows(), reference.ncols()),
            got: format!("{}x{}", estimate.nrows(), estimate.ncols()),
        });
    }
    let d = estimate.ncols();
    let m = reference.t().dot(estimate);
    let (w, _, v) = linalg::svd(&m)?;
    let q = w.dot(&v.t());
    debug_assert!({
        let qtq = q.t().dot(&q);
        (0..d).all(|i| (0..d).all(|j| {
            let expect = if i == j { 1.0 } else { 0.0 };
            (qtq[[i, j]] - expect).abs() <= 1e-10
        }))
    });
    let aligned = reference.dot(&q);
    let mut err = 0.0;
    for (a, b) in estimate.iter().zip(aligned.iter()) {
        let diff = a - b;
        err += diff * diff;
    }
    Ok((q, err.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng as _;

    fn random_orthogonal(d: usize, rng: &mut seeding::Rng) -> Array2<f64> {
        let g = Array2::from_shape_fn((d, d), |_| rng.gen_range(-1.0..1.0));
        let (u, _, _) = linalg::svd(&g).unwrap();
        u
    }

    #[test]
    fn recovers_planted_rotation() {
        let mut rng = seeding::rng(11);
        let reference = Array2::from_shape_fn((20, 3), |_| rng.gen_range(-1.0..1.0));
        let planted = random_orthogonal(3, &mut rng);
        let estimate = reference.dot(&planted);
        let (q, residual) = procrustes_align(&estimate, &reference).unwrap();
        assert!(residual <= 1e-10, "residual {residual}");
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(q[[i, j]], planted[[i, j]], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn residual_beats_random_orthogonal_search() {
        let mut rng = seeding::rng(23);
        let reference = Array2::from_shape_fn((15, 3), |_| rng.gen_range(-1.0..1.0));
        let estimate = Array2::from_shape_fn((15, 3), |_| rng.gen_range(-1.0..1.0));
        let (_, residual) = procrustes_align(&estimate, &reference).unwrap();
        for _ in 0..1000 {
            let q = random_orthogonal(3, &mut rng);
            let aligned = reference.dot(&q);
            let mut err = 0.0;
            for (a, b) in estimate.iter().zip(aligned.iter()) {
                let d = a - b;
                err += d * d;
            }
            assert!(residual <= err.sqrt() + 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = array![[1.0, 0.0], [0.0, 1.0]];
        let b = array![[1.0], [0.0]];
        assert!(procrustes_align(&a, &b).is_err());
    }

    #[test]
    fn identity_when_already_aligned() {
        let a = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let (q, residual) = procrustes_align(&a, &a).unwrap();
        assert!(residual <= 1e-12);
        assert_abs_diff_eq!(q[[0, 0]], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q[[1, 1]], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q[[0, 1]], 0.0, epsilon = 1e-12);
    }
}
