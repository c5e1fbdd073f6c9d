//! Evaluation metrics: permutation-matched mis-clustering rate,
//! log-estimation error of embeddings, relative edge density between and
//! within clusters, and the per-worker unbalance statistic.
//!
//! Cluster labels are identifiable only up to renaming, so every rate is
//! minimized over label permutations and the minimizing permutation is
//! returned for auditability: exact enumeration up to
//! [`BRUTE_FORCE_MAX_K`] clusters, Hungarian assignment above that.

use ndarray::Array2;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::protocol::{ClusteringResult, PartitionPlan};
use crate::sbm::GroundTruth;
use crate::spectral::procrustes_align;

/// Largest cluster count matched by exact enumeration (8! = 40320 candidate
/// permutations); larger problems use the Hungarian algorithm.
pub const BRUTE_FORCE_MAX_K: usize = 8;

/// Counts label co-occurrences: entry `[t][e]` is the number of nodes with
/// true label `t` and estimated label `e`.
pub fn confusion_matrix(est: &[usize], truth: &[usize], k: usize) -> Result<Array2<u64>> {
    if est.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} estimated labels", truth.len()),
            got: format!("{}", est.len()),
        });
    }
    if est.is_empty() {
        return Err(Error::InvalidParameter("no labels to score".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let mut conf = Array2::zeros((k, k));
    for (&e, &t) in est.iter().zip(truth) {
        if e >= k || t >= k {
            return Err(Error::InvalidParameter(format!(
                "label pair ({t}, {e}) out of range for k = {k}"
            )));
        }
        conf[[t, e]] += 1;
    }
    Ok(conf)
}

/// Exact matching: tries every permutation in lexicographic order and keeps
/// the first one maximizing agreement. Returns the agreement count and the
/// permutation mapping estimated labels to true labels.
pub fn match_by_bruteforce(conf: &Array2<u64>) -> (u64, Vec<usize>) {
    let k = conf.nrows();
    let mut best_agree = 0;
    let mut best_perm = (0..k).collect::<Vec<_>>();
    let mut first = true;
    for perm in (0..k).permutations(k) {
        let agree: u64 = perm.iter().enumerate().map(|(e, &t)| conf[[t, e]]).sum();
        if first || agree > best_agree {
            best_agree = agree;
            best_perm = perm;
            first = false;
        }
    }
    (best_agree, best_perm)
}

/// Minimum-cost assignment (Jonker-style potentials, O(k³)) maximizing
/// agreement. Same contract as [`match_by_bruteforce`]; ties may resolve to
/// a different (equally good) permutation.
pub fn match_by_hungarian(conf: &Array2<u64>) -> (u64, Vec<usize>) {
    let n = conf.nrows();
    // Row i = estimated label, column j = true label, cost = -agreement.
    let cost =
        Array2::from_shape_fn((n, n), |(i, j)| -(i64::try_from(conf[[j, i]]).unwrap()));
    const INF: i64 = i64::MAX / 2;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j]: row matched to column j (1-based)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    let agree = perm
        .iter()
        .enumerate()
        .map(|(e, &t)| conf[[t, e]])
        .sum();
    (agree, perm)
}

/// Fraction of nodes whose estimated label disagrees with the truth under
/// the best label matching; also returns that matching
/// (`permutation[estimated] = true`).
pub fn misclustering_rate(est: &[usize], truth: &[usize], k: usize) -> Result<(f64, Vec<usize>)> {
    let conf = confusion_matrix(est, truth, k)?;
    let (agree, perm) = if k <= BRUTE_FORCE_MAX_K {
        match_by_bruteforce(&conf)
    } else {
        match_by_hungarian(&conf)
    };
    let rate = 1.0 - agree as f64 / est.len() as f64;
    Ok((rate, perm))
}

/// Natural log of the Procrustes-minimal distance between an estimated
/// embedding and its population counterpart. A residual of exactly zero
/// (including bitwise-identical inputs, whose optimal alignment is the
/// identity) yields the `-inf` sentinel rather than an error.
pub fn lee(estimated: &Array2<f64>, population: &Array2<f64>) -> Result<f64> {
    if estimated == population {
        if estimated.nrows() == 0 {
            return Err(Error::InvalidParameter("empty embedding".into()));
        }
        return Ok(f64::NEG_INFINITY);
    }
    let (_, residual) = procrustes_align(estimated, population)?;
    if residual == 0.0 {
        Ok(f64::NEG_INFINITY)
    } else {
        Ok(residual.ln())
    }
}

/// Ratio of between-cluster to within-cluster edge density, both taken over
/// unordered node pairs. Well-separated communities give values near 0;
/// structureless labelings give values near 1.
pub fn relative_density(a: &SparseGraph, labels: &[usize]) -> Result<f64> {
    let n = a.num_nodes();
    if labels.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} labels"),
            got: format!("{}", labels.len()),
        });
    }
    let num_clusters = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0u64; num_clusters];
    for &g in labels {
        sizes[g] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::NotEnoughClusters);
    }
    let within_pairs: u64 = sizes.iter().map(|&s| s * (s - 1) / 2).sum();
    let total_pairs = (n as u64) * (n as u64 - 1) / 2;
    let between_pairs = total_pairs - within_pairs;
    if within_pairs == 0 {
        return Err(Error::NoWithinPairs);
    }
    let mut within_edges = 0u64;
    let mut between_edges = 0u64;
    for u in 0..n {
        for &v in a.neighbors(u) {
            if v > u {
                if labels[u] == labels[v] {
                    within_edges += 1;
                } else {
                    between_edges += 1;
                }
            }
        }
    }
    if within_edges == 0 {
        return Err(Error::ZeroWithinDensity);
    }
    let within_density = within_edges as f64 / within_pairs as f64;
    let between_density = between_edges as f64 / between_pairs as f64;
    Ok(between_density / within_density)
}

/// Per-worker unbalance: how far worker `m`'s block composition drifts from
/// the global one, `max_k |fraction of block k in S_m − fraction in graph|`,
/// where `S_m` is the worker's nodes together with all pilots.
pub fn unbalance_alpha(plan: &PartitionPlan, truth: &GroundTruth) -> Vec<f64> {
    assert_eq!(
        plan.num_nodes(),
        truth.len(),
        "plan and ground truth cover different node sets"
    );
    let k = truth.num_blocks();
    let n = truth.len() as f64;
    let global = truth.block_counts();
    let mut pilot_counts = vec![0u64; k];
    for &p in plan.pilot.indices() {
        pilot_counts[truth.labels()[p]] += 1;
    }
    plan.worker_assignments
        .iter()
        .map(|assignment| {
            let mut counts = pilot_counts.clone();
            for &u in assignment {
                counts[truth.labels()[u]] += 1;
            }
            let size = (assignment.len() + plan.pilot.len()) as f64;
            (0..k)
                .map(|blk| (counts[blk] as f64 / size - global[blk] as f64 / n).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Column order of [`EvalReport::csv_row`].
pub const CSV_HEADER: &str =
    "misclustering_rate,lee,red,per_worker_rates,alpha,matching_permutation";

/// All evaluation quantities for one detection run. Optional entries stay
/// empty in CSV output when the metric was not computed.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub misclustering_rate: f64,
    /// Rate over each worker's own nodes (pilots excluded: they are labeled
    /// once by the master and would add the same constant to every worker),
    /// scored under the global matching. Workers without nodes score 0.
    pub per_worker_rates: Vec<f64>,
    pub lee: Option<f64>,
    pub red: Option<f64>,
    pub alpha: Vec<f64>,
    pub matching_permutation: Vec<usize>,
}

impl EvalReport {
    /// Scores a finished run against ground truth. Embedding- and
    /// density-based metrics are passed in by the caller — they need inputs
    /// (population embeddings, the graph) this function does not own.
    pub fn from_run(
        result: &ClusteringResult,
        truth: &GroundTruth,
        lee: Option<f64>,
        red: Option<f64>,
    ) -> Result<Self> {
        Self::from_labels(&result.labels, result.k, &result.plan, truth, lee, red)
    }

    /// [`EvalReport::from_run`] for a label vector replayed from disk, where
    /// no in-memory `ClusteringResult` exists — only the labels and the plan.
    pub fn from_labels(
        labels: &[usize],
        k: usize,
        plan: &PartitionPlan,
        truth: &GroundTruth,
        lee: Option<f64>,
        red: Option<f64>,
    ) -> Result<Self> {
        let (rate, perm) = misclustering_rate(labels, truth.labels(), k)?;
        let per_worker_rates = plan
            .worker_assignments
            .iter()
            .map(|assignment| {
                if assignment.is_empty() {
                    return 0.0;
                }
                let wrong = assignment
                    .iter()
                    .filter(|&&u| perm[labels[u]] != truth.labels()[u])
                    .count();
                wrong as f64 / assignment.len() as f64
            })
            .collect();
        let alpha = unbalance_alpha(plan, truth);
        Ok(EvalReport {
            misclustering_rate: rate,
            per_worker_rates,
            lee,
            red,
            alpha,
            matching_permutation: perm,
        })
    }

    /// One CSV row matching [`CSV_HEADER`]; vector fields are
    /// semicolon-joined, absent optionals render as empty fields.
    pub fn csv_row(&self) -> String {
        fn join<T: std::fmt::Display>(xs: &[T]) -> String {
            xs.iter().map(T::to_string).collect::<Vec<_>>().join(";")
        }
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.misclustering_rate,
            opt(self.lee),
            opt(self.red),
            join(&self.per_worker_rates),
            join(&self.alpha),
            join(&self.matching_permutation),
        )
    }
}
