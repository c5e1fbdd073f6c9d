//! Expected-value (population) counterparts of the sampled matrices.
//!
//! Replacing the adjacency matrix of a block model by its expectation
//! `Θ B Θᵀ` turns every spectral quantity in the pipeline into a closed form
//! driven by the small `K x K` connectivity matrix. The helpers here build
//! those closed forms — factoring through the `K x K` core instead of the
//! full matrix wherever possible, so the results carry no iteration error —
//! and serve as machine-precision references for the sampled code paths.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg;
use crate::sbm::GroundTruth;
use crate::spectral::{magnitude_order, TOL_SIGMA_REL};

/// Expected degree scale per block: `d[i] = Σ_j B[i, j] · counts[j]`.
fn block_degrees(b: &Array2<f64>, counts: &[f64]) -> Result<Vec<f64>> {
    let k = b.nrows();
    let mut d = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            d[i] += b[[i, j]] * counts[j];
        }
        if d[i] <= 0.0 {
            return Err(Error::InvalidConnectivity(format!(
                "block {i} has zero expected degree for the given block sizes"
            )));
        }
    }
    Ok(d)
}

/// Block occupancy counts of a label vector, as floats.
fn block_counts(labels: &[usize], k: usize) -> Result<Vec<f64>> {
    let mut counts = vec![0.0; k];
    for (i, &g) in labels.iter().enumerate() {
        if g >= k {
            return Err(Error::InvalidParameter(format!(
                "label {g} at position {i} exceeds the block count {k}"
            )));
        }
        counts[g] += 1.0;
    }
    Ok(counts)
}

fn square_dim(b: &Array2<f64>) -> Result<usize> {
    if b.nrows() == 0 || b.nrows() != b.ncols() {
        return Err(Error::ShapeMismatch {
            expected: "square non-empty connectivity matrix".into(),
            got: format!("{} x {}", b.nrows(), b.ncols()),
        });
    }
    Ok(b.nrows())
}

/// Dense expected normalized adjacency `D^{-1/2} (Θ B Θᵀ) D^{-1/2}`.
///
/// Entry `(i, j)` depends only on the blocks of `i` and `j`, so the matrix
/// has at most `K` distinct rows. It is kept dense deliberately: this is the
/// honest `N x N` route that the factored construction below (and the sparse
/// samplers elsewhere) are compared against in tests.
pub fn population_laplacian(truth: &GroundTruth, b: &Array2<f64>) -> Result<Array2<f64>> {
    let k = square_dim(b)?;
    if truth.num_blocks() != k {
        return Err(Error::ShapeMismatch {
            expected: format!("{} blocks", truth.num_blocks()),
            got: format!("{k} x {k} connectivity"),
        });
    }
    let counts = block_counts(truth.labels(), k)?;
    let d = block_degrees(b, &counts)?;
    let scale: Vec<f64> = d.iter().map(|&x| 1.0 / x.sqrt()).collect();
    let n = truth.len();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        let gi = truth.labels()[i];
        for j in 0..n {
            let gj = truth.labels()[j];
            out[[i, j]] = b[[gi, gj]] * scale[gi] * scale[gj];
        }
    }
    Ok(out)
}

/// Top-`K` eigenpairs of the population normalized adjacency, via the `K x K`
/// core.
///
/// With `Θ̃ = Θ diag(counts)^{-1/2}` (orthonormal columns) the population
/// matrix factors as `Θ̃ M Θ̃ᵀ` for the symmetric
/// `M = diag(counts)^{1/2} B_L diag(counts)^{1/2}`, so its nonzero spectrum
/// is exactly the spectrum of `M` and the eigenvectors lift as `Θ̃ V`.
/// Eigenvalues come back ordered by descending magnitude (ties by descending
/// signed value), matching the sampled eigensolver's convention. The lifted
/// vectors have one distinct row per block and orthonormal columns.
pub fn population_eigvecs(truth: &GroundTruth, b: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let k = square_dim(b)?;
    if truth.num_blocks() != k {
        return Err(Error::ShapeMismatch {
            expected: format!("{} blocks", truth.num_blocks()),
            got: format!("{k} x {k} connectivity"),
        });
    }
    let counts = block_counts(truth.labels(), k)?;
    let d = block_degrees(b, &counts)?;
    let mut core = Array2::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            core[[i, j]] = counts[i].sqrt() * b[[i, j]] * counts[j].sqrt() / (d[i] * d[j]).sqrt();
        }
    }
    let (vals, vecs) = linalg::eigh(&core)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| magnitude_order(vals[i], vals[j]));
    let threshold = 1e-12 * vals[order[0]].abs();
    let smallest = vals[order[k - 1]].abs();
    if smallest <= threshold {
        return Err(Error::RankDeficient {
            index: k - 1,
            value: smallest,
            threshold,
        });
    }
    let n = truth.len();
    let mut u = Array2::zeros((n, k));
    let mut ordered_vals = Vec::with_capacity(k);
    for (col, &oi) in order.iter().enumerate() {
        ordered_vals.push(vals[oi]);
        for i in 0..n {
            let g = truth.labels()[i];
            u[[i, col]] = vecs[[g, oi]] / counts[g].sqrt();
        }
    }
    Ok((ordered_vals, u))
}

/// Top-`K` left singular vectors of the population rectangular Laplacian.
///
/// The expected sub-adjacency between a stacked row sample (`labels_sub`,
/// pilots first then locals by convention, though any label vector works) and
/// the pilot column sample (`labels_pilot`) factors as `Θ C Θ_0ᵀ` with
/// `C = D_B^{-1/2} B F_B^{-1/2}`, where `D_B` / `F_B` hold the expected row /
/// column degrees per block. Scaling `C` by square-root block counts on both
/// sides gives a `K x K` core whose SVD lifts exactly to the full matrix.
///
/// Fails with `RankDeficient` when the construction cannot support `K`
/// communities: a block absent from either sample, or a connectivity matrix
/// whose numerical rank is below `K`.
pub fn embed_population(
    labels_sub: &[usize],
    labels_pilot: &[usize],
    b: &Array2<f64>,
) -> Result<Array2<f64>> {
    let k = square_dim(b)?;
    if labels_sub.is_empty() || labels_pilot.is_empty() {
        return Err(Error::InvalidParameter(
            "population embedding needs a non-empty row and column sample".into(),
        ));
    }
    let counts_sub = block_counts(labels_sub, k)?;
    let counts_pilot = block_counts(labels_pilot, k)?;
    for blk in 0..k {
        if counts_sub[blk] == 0.0 || counts_pilot[blk] == 0.0 {
            // An unrepresented block removes one dimension from the image.
            return Err(Error::RankDeficient {
                index: blk,
                value: 0.0,
                threshold: 0.0,
            });
        }
    }
    let d = block_degrees(b, &counts_pilot)?; // row sums run over pilot columns
    let f = block_degrees(b, &counts_sub)?; // column sums run over all rows
    let mut core = Array2::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            core[[i, j]] =
                counts_sub[i].sqrt() * b[[i, j]] * counts_pilot[j].sqrt() / (d[i] * f[j]).sqrt();
        }
    }
    let (w, s, _v) = linalg::svd(&core)?;
    let threshold = TOL_SIGMA_REL * s[0];
    if s[k - 1] <= threshold {
        return Err(Error::RankDeficient {
            index: k - 1,
            value: s[k - 1],
            threshold,
        });
    }
    let mut u = Array2::zeros((labels_sub.len(), k));
    for (r, &g) in labels_sub.iter().enumerate() {
        for c in 0..k {
            u[[r, c]] = w[[g, c]] / counts_sub[g].sqrt();
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbm::make_connectivity;

    fn truth_from_sizes(sizes: &[usize]) -> GroundTruth {
        let mut labels = Vec::new();
        for (blk, &s) in sizes.iter().enumerate() {
            labels.extend(std::iter::repeat(blk).take(s));
        }
        GroundTruth::new(labels, sizes.len()).unwrap()
    }

    #[test]
    fn laplacian_matches_hand_values() {
        let truth = truth_from_sizes(&[3, 3]);
        let b = make_connectivity(0.2, 0.5, 2).unwrap();
        let lap = population_laplacian(&truth, &b).unwrap();
        // Expected degree per block: 3·0.2 + 3·0.1 = 0.9 for both blocks.
        assert!((lap[[0, 1]] - 0.2 / 0.9).abs() < 1e-15);
        assert!((lap[[0, 4]] - 0.1 / 0.9).abs() < 1e-15);
        assert!((lap[[4, 5]] - 0.2 / 0.9).abs() < 1e-15);
    }

    #[test]
    fn factored_route_matches_dense_eigendecomposition() {
        let truth = truth_from_sizes(&[4, 5, 6]);
        let b = make_connectivity(0.3, 0.6, 3).unwrap();
        let (vals, u) = population_eigvecs(&truth, &b).unwrap();

        let dense = population_laplacian(&truth, &b).unwrap();
        let (dv, dvecs) = linalg::eigh(&dense).unwrap();
        let mut order: Vec<usize> = (0..dense.nrows()).collect();
        order.sort_by(|&i, &j| magnitude_order(dv[i], dv[j]));
        let mut dense_top = Array2::zeros((dense.nrows(), 3));
        for (col, &oi) in order.iter().take(3).enumerate() {
            for r in 0..dense.nrows() {
                dense_top[[r, col]] = dvecs[[r, oi]];
            }
            assert!((dv[oi] - vals[col]).abs() < 1e-10);
        }
        let sines = linalg::principal_angle_sines(&u, &dense_top).unwrap();
        assert!(sines.iter().all(|s| *s < 1e-10), "sines {sines:?}");
    }

    #[test]
    fn eigvecs_have_one_distinct_row_per_block() {
        let truth = truth_from_sizes(&[5, 4, 3, 6]);
        let b = make_connectivity(0.25, 0.5, 4).unwrap();
        let (_, u) = population_eigvecs(&truth, &b).unwrap();
        for i in 0..truth.len() {
            for j in 0..truth.len() {
                let dist: f64 = (0..4)
                    .map(|c| (u[[i, c]] - u[[j, c]]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if truth.labels()[i] == truth.labels()[j] {
                    assert!(dist <= 1e-12);
                } else {
                    assert!(dist > 1e-6, "blocks {i}/{j} collapsed");
                }
            }
        }
    }

    #[test]
    fn eigvecs_are_orthonormal() {
        let truth = truth_from_sizes(&[7, 2, 5]);
        let b = make_connectivity(0.4, 0.3, 3).unwrap();
        let (_, u) = population_eigvecs(&truth, &b).unwrap();
        let gram = u.t().dot(&u);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rectangular_embedding_matches_dense_svd() {
        let b = make_connectivity(0.3, 0.5, 3).unwrap();
        let labels_pilot = vec![0, 0, 1, 1, 1, 2, 2];
        let mut labels_sub = labels_pilot.clone();
        labels_sub.extend_from_slice(&[0, 0, 0, 1, 2, 2, 2, 2]);
        let u = embed_population(&labels_sub, &labels_pilot, &b).unwrap();

        // Honest route: materialize the rectangular matrix and take its SVD.
        let counts_sub = block_counts(&labels_sub, 3).unwrap();
        let counts_pilot = block_counts(&labels_pilot, 3).unwrap();
        let d = block_degrees(&b, &counts_pilot).unwrap();
        let f = block_degrees(&b, &counts_sub).unwrap();
        let mut dense = Array2::zeros((labels_sub.len(), labels_pilot.len()));
        for (r, &gr) in labels_sub.iter().enumerate() {
            for (c, &gc) in labels_pilot.iter().enumerate() {
                dense[[r, c]] = b[[gr, gc]] / (d[gr] * f[gc]).sqrt();
            }
        }
        let (left, _s, _v) = linalg::svd(&dense).unwrap();
        let top = left.slice(ndarray::s![.., ..3]).to_owned();
        let sines = linalg::principal_angle_sines(&u, &top).unwrap();
        assert!(sines.iter().all(|s| *s < 1e-8), "sines {sines:?}");

        // Rows are equal exactly when blocks are equal.
        for (i, &gi) in labels_sub.iter().enumerate() {
            for (j, &gj) in labels_sub.iter().enumerate() {
                let dist: f64 = (0..3)
                    .map(|c| (u[[i, c]] - u[[j, c]]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert_eq!(gi == gj, dist <= 1e-10, "rows {i}/{j}");
            }
        }
    }

    #[test]
    fn missing_pilot_block_is_rank_deficient() {
        let b = make_connectivity(0.3, 0.5, 2).unwrap();
        let err = embed_population(&[0, 0, 1, 1], &[0, 0], &b).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { index: 1, .. }));
    }

    #[test]
    fn flat_connectivity_is_rank_deficient() {
        let b = Array2::from_elem((2, 2), 0.2);
        let truth = truth_from_sizes(&[3, 3]);
        assert!(matches!(
            population_eigvecs(&truth, &b),
            Err(Error::RankDeficient { .. })
        ));
        assert!(matches!(
            embed_population(&[0, 1, 1], &[0, 0, 1], &b),
            Err(Error::RankDeficient { .. })
        ));
    }
}
