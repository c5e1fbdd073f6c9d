//! Euclidean k-means over matrix rows.
//!
//! Lloyd iterations with k-means++ seeding, a fixed number of random
//! restarts, and deterministic tie-breaking, so a `(points, k, seed)`
//! triple always produces the same labeling.

use crate::error::{Error, Result};
use crate::seeding;
use ndarray::Array2;
use rand::Rng as _;

/// Number of independent k-means++ restarts; the best objective wins.
pub const RESTARTS: usize = 10;
/// Iteration cap per restart.
pub const MAX_ITERS: usize = 100;
/// Relative objective-improvement threshold that stops iterating.
pub const REL_TOL: f64 = 1e-8;

/// Clusters the rows of `points` into `k` groups.
///
/// Returns per-row labels in `0..k` (every cluster non-empty) and the
/// `k x d` matrix of final centers. Distance ties go to the smallest
/// cluster index. Empty clusters arising during iteration are repaired by
/// reseeding them with the point farthest from its current center; if no
/// restart can keep all clusters populated (e.g. fewer distinct rows than
/// `k`), the run fails with [`Error::EmptyCluster`].
pub fn kmeans(points: &Array2<f64>, k: usize, seed: u64) -> Result<(Vec<usize>, Array2<f64>)> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must lie in 1..={n}"
        )));
    }
    let mut rng = seeding::rng(seed);
    let mut best: Option<(f64, Vec<usize>, Array2<f64>)> = None;
    for _ in 0..RESTARTS {
        if let Ok((obj, labels, centers)) = run_once(points, k, &mut rng) {
            let better = match &best {
                Some((b, _, _)) => obj < *b,
                None => true,
            };
            if better {
                best = Some((obj, labels, centers));
            }
        }
    }
    best.map(|(_, labels, centers)| (labels, centers))
        .ok_or(Error::EmptyCluster { k, n })
}

fn run_once(
    points: &Array2<f64>,
    k: usize,
    rng: &mut seeding::Rng,
) -> Result<(f64, Vec<usize>, Array2<f64>)> {
    let n = points.nrows();
    let mut centers = plus_plus_init(points, k, rng);
    let mut labels = vec![0usize; n];
    let mut prev_obj = f64::INFINITY;
    for _ in 0..MAX_ITERS {
        let changed = assign(points, &centers, &mut labels);
        repair_empty(points, &mut centers, &mut labels)?;
        update_centers(points, &labels, &mut centers);
        let obj = objective(points, &centers, &labels);
        debug_assert!(
            obj <= prev_obj * (1.0 + 1e-12) + 1e-12,
            "k-means objective increased: {prev_obj} -> {obj}"
        );
        let converged = !changed || prev_obj - obj <= REL_TOL * prev_obj.max(f64::MIN_POSITIVE);
        prev_obj = obj;
        if converged {
            break;
        }
    }
    Ok((prev_obj, labels, centers))
}

/// k-means++ seeding: first center uniform, then squared-distance weighted.
fn plus_plus_init(points: &Array2<f64>, k: usize, rng: &mut seeding::Rng) -> Array2<f64> {
    let (n, d) = points.dim();
    let mut centers = Array2::zeros((k, d));
    let first = rng.gen_range(0..n);
    centers.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| row_dist2(points, i, &centers, 0))
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen_range(0.0..1.0) * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // All remaining points coincide with chosen centers.
            rng.gen_range(0..n)
        };
        centers.row_mut(c).assign(&points.row(pick));
        for i in 0..n {
            let dist = row_dist2(points, i, &centers, c);
            if dist < d2[i] {
                d2[i] = dist;
            }
        }
    }
    centers
}

/// Nearest-center assignment; returns whether any label changed.
fn assign(points: &Array2<f64>, centers: &Array2<f64>, labels: &mut [usize]) -> bool {
    let n = points.nrows();
    let k = centers.nrows();
    let mut changed = false;
    for i in 0..n {
        let mut best = 0usize;
        let mut best_d = row_dist2(points, i, centers, 0);
        for c in 1..k {
            let dist = row_dist2(points, i, centers, c);
            if dist < best_d {
                best_d = dist;
                best = c;
            }
        }
        if labels[i] != best {
            labels[i] = best;
            changed = true;
        }
    }
    changed
}

/// Reseeds each empty cluster with the point farthest from its own center.
fn repair_empty(
    points: &Array2<f64>,
    centers: &mut Array2<f64>,
    labels: &mut [usize],
) -> Result<()> {
    let n = points.nrows();
    let k = centers.nrows();
    let mut counts = vec![0usize; k];
    for &g in labels.iter() {
        counts[g] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut far: Option<(usize, f64)> = None;
        for i in 0..n {
            if counts[labels[i]] < 2 {
                continue; // stealing would just move the hole
            }
            let dist = row_dist2(points, i, centers, labels[i]);
            if far.map_or(true, |(_, fd)| dist > fd) {
                far = Some((i, dist));
            }
        }
        let Some((steal, dist)) = far else {
            return Err(Error::EmptyCluster {
                k,
                n,
            });
        };
        if dist == 0.0 {
            // Farthest point sits on its center: there are fewer than k
            // distinct rows, so the cluster can never be populated.
            return Err(Error::EmptyCluster { k, n });
        }
        counts[labels[steal]] -= 1;
        labels[steal] = c;
        counts[c] = 1;
        centers.row_mut(c).assign(&points.row(steal));
    }
    Ok(())
}

fn update_centers(points: &Array2<f64>, labels: &[usize], centers: &mut Array2<f64>) {
    let (n, d) = points.dim();
    let k = centers.nrows();
    centers.fill(0.0);
    let mut counts = vec![0usize; k];
    for i in 0..n {
        counts[labels[i]] += 1;
        for j in 0..d {
            centers[[labels[i], j]] += points[[i, j]];
        }
    }
    for c in 0..k {
        debug_assert!(counts[c] > 0, "empty cluster survived repair");
        for j in 0..d {
            centers[[c, j]] /= counts[c] as f64;
        }
    }
}

fn objective(points: &Array2<f64>, centers: &Array2<f64>, labels: &[usize]) -> f64 {
    (0..points.nrows())
        .map(|i| row_dist2(points, i, centers, labels[i]))
        .sum()
}

fn row_dist2(points: &Array2<f64>, i: usize, centers: &Array2<f64>, c: usize) -> f64 {
    let d = points.ncols();
    let mut acc = 0.0;
    for j in 0..d {
        let diff = points[[i, j]] - centers[[c, j]];
        acc += diff * diff;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = array![[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]];
        let (labels, centers) = kmeans(&pts, 1, 0).unwrap();
        assert_eq!(labels, vec![0, 0, 0]);
        assert_abs_diff_eq!(centers[[0, 0]], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(centers[[0, 1]], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn k_equals_n_hits_zero_objective() {
        let pts = array![[0.0], [1.0], [2.0], [5.0]];
        let (labels, centers) = kmeans(&pts, 4, 3).unwrap();
        let mut seen = labels.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
        for i in 0..4 {
            assert_abs_diff_eq!(centers[[labels[i], 0]], pts[[i, 0]], epsilon = 1e-12);
        }
    }

    #[test]
    fn duplicate_points_cannot_fill_k() {
        let pts = array![[1.0], [1.0], [1.0]];
        assert!(matches!(
            kmeans(&pts, 3, 0),
            Err(Error::EmptyCluster { .. })
        ));
    }

    #[test]
    fn separated_blobs_recover_exactly() {
        // Three tight blobs, separation 10x their spread; recovery should be
        // exact in at least 59 of 60 (seed, jitter) runs.
        let mut exact = 0;
        let mut total = 0;
        for seed in 0..20u64 {
            let mut rng = seeding::rng(seed + 1000);
            for _jitter in 0..3 {
                let mut pts = Array2::zeros((30, 2));
                let blobs = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
                for i in 0..30 {
                    let b = i / 10;
                    pts[[i, 0]] = blobs[b][0] + rng.gen_range(-1.0..1.0);
                    pts[[i, 1]] = blobs[b][1] + rng.gen_range(-1.0..1.0);
                }
                let (labels, _) = kmeans(&pts, 3, seed).unwrap();
                let ok = (0..30).all(|i| labels[i] == labels[(i / 10) * 10]);
                let distinct = labels[0] != labels[10] && labels[10] != labels[20] && labels[0] != labels[20];
                exact += usize::from(ok && distinct);
                total += 1;
            }
        }
        assert!(exact >= 59, "only {exact}/{total} exact recoveries");
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut rng = seeding::rng(5);
        let pts = Array2::from_shape_fn((50, 3), |_| rng.gen_range(-1.0..1.0));
        let (l1, c1) = kmeans(&pts, 4, 77).unwrap();
        let (l2, c2) = kmeans(&pts, 4, 77).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(c1, c2);
    }
}
