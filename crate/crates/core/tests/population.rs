//! Exact identities of the expected (population) operators: the factored
//! eigendecomposition reconstructs the dense operator, subsets embed as
//! scaled rotations of the full graph, and rectangular embeddings carry the
//! block structure in their row norms.

use approx::assert_abs_diff_eq;
use dcd_core::population::{embed_population, population_eigvecs, population_laplacian};
use dcd_core::sbm::{make_connectivity, GroundTruth};
use dcd_core::spectral::procrustes_align;
use ndarray::{s, Array2};

fn truth_from_sizes(sizes: &[usize]) -> GroundTruth {
    let mut labels = Vec::new();
    for (blk, &size) in sizes.iter().enumerate() {
        labels.extend(std::iter::repeat(blk).take(size));
    }
    GroundTruth::new(labels, sizes.len()).unwrap()
}

#[test]
fn eigvecs_reconstruct_the_population_operator() {
    let b = make_connectivity(0.3, 0.6, 3).unwrap();
    let truth = truth_from_sizes(&[5, 8, 3]);
    let dense = population_laplacian(&truth, &b).unwrap();
    let (values, u) = population_eigvecs(&truth, &b).unwrap();
    let n = truth.len();
    let mut rebuilt = Array2::<f64>::zeros((n, n));
    for (col, &lambda) in values.iter().enumerate() {
        let v = u.column(col);
        for i in 0..n {
            for j in 0..n {
                rebuilt[[i, j]] += lambda * v[i] * v[j];
            }
        }
    }
    // The operator has rank K exactly, so K terms rebuild it completely.
    for (a, b) in dense.iter().zip(rebuilt.iter()) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
    }
}

#[test]
fn subsets_embed_as_scaled_rotations_of_the_whole() {
    // A proportional subset (half of each block) must reproduce the full
    // embedding restricted to its rows, inflated by (n_sub / n_total)^{-1/2}.
    let b = make_connectivity(0.4, 0.7, 2).unwrap();
    let full = truth_from_sizes(&[6, 6]);
    let sub = truth_from_sizes(&[3, 3]);
    let (_, u_full) = population_eigvecs(&full, &b).unwrap();
    let (_, u_sub) = population_eigvecs(&sub, &b).unwrap();
    // Rows 0..3 and 6..9 of the full embedding are the chosen subset.
    let mut restricted = Array2::zeros((6, 2));
    restricted.slice_mut(s![0..3, ..]).assign(&u_full.slice(s![0..3, ..]));
    restricted.slice_mut(s![3..6, ..]).assign(&u_full.slice(s![6..9, ..]));

    let ratio = (6.0f64 / 12.0).powf(-0.5);
    let (_, residual) = procrustes_align(&u_sub, &(restricted.clone() * ratio)).unwrap();
    assert!(residual <= 1e-10, "scaled rotation residual {residual}");

    // Any other normalization (e.g. dividing by total-plus-pilot counts)
    // breaks the identity by a visible margin.
    let wrong_ratio = (6.0f64 / 16.0).powf(-0.5);
    let (_, off) = procrustes_align(&u_sub, &(restricted * wrong_ratio)).unwrap();
    assert!(off > 0.1, "wrong scale should not align, residual {off}");
}

#[test]
fn rectangular_row_norms_follow_block_counts() {
    let b = make_connectivity(0.5, 0.5, 3).unwrap();
    let labels_pilot = vec![0, 0, 1, 1, 2, 2];
    let labels_sub = vec![0, 0, 1, 1, 2, 2, 0, 2, 2, 1];
    let u = embed_population(&labels_sub, &labels_pilot, &b).unwrap();
    let counts = [3.0f64, 3.0, 4.0];
    for (r, &g) in labels_sub.iter().enumerate() {
        let norm: f64 = (0..3).map(|c| u[[r, c]] * u[[r, c]]).sum::<f64>().sqrt();
        assert_abs_diff_eq!(norm, 1.0 / counts[g].sqrt(), epsilon = 1e-12);
    }
    // Rows coincide exactly within a block and differ across blocks.
    for r in 0..labels_sub.len() {
        for r2 in (r + 1)..labels_sub.len() {
            let dist: f64 = (0..3)
                .map(|c| (u[[r, c]] - u[[r2, c]]).powi(2))
                .sum::<f64>()
                .sqrt();
            if labels_sub[r] == labels_sub[r2] {
                assert!(dist <= 1e-12);
            } else {
                assert!(dist > 1e-3);
            }
        }
    }
}
