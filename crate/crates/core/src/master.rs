//! Master-side stage: pilot sampling, pilot-graph clustering, and
//! pseudo-center selection.
//!
//! The master holds the adjacency among a subset of `l` "pilot" nodes,
//! clusters them spectrally, and then reduces its entire output to `k` pilot
//! positions — one representative per cluster — which is all that is ever
//! broadcast to the workers.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::sbm::GroundTruth;
use crate::sc::embed_and_cluster;
use crate::seeding::rng;

/// How pilot nodes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PilotPolicy {
    /// Per-block counts proportional to block sizes (requires ground truth).
    Stratified,
    /// Simple random sample; the fallback when no labels exist.
    Uniform,
}

impl fmt::Display for PilotPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PilotPolicy::Stratified => "stratified",
            PilotPolicy::Uniform => "uniform",
        })
    }
}

impl FromStr for PilotPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stratified" => Ok(PilotPolicy::Stratified),
            "uniform" => Ok(PilotPolicy::Uniform),
            other => Err(Error::InvalidParameter(format!(
                "unknown pilot policy '{other}' (expected 'stratified' or 'uniform')"
            ))),
        }
    }
}

/// The sampled pilot set: sorted distinct global node indices plus the
/// sampling provenance needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotSet {
    indices: Vec<usize>,
    pub policy: PilotPolicy,
    pub seed: u64,
}

impl PilotSet {
    /// Wraps an explicit index list, enforcing sorted-distinct-in-range.
    pub fn from_indices(
        indices: Vec<usize>,
        policy: PilotPolicy,
        seed: u64,
        num_nodes: usize,
    ) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter("pilot set must not be empty".into()));
        }
        for w in indices.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter(
                    "pilot indices must be sorted and distinct".into(),
                ));
            }
        }
        if *indices.last().unwrap() >= num_nodes {
            return Err(Error::InvalidParameter(format!(
                "pilot index {} out of range for {num_nodes} nodes",
                indices.last().unwrap()
            )));
        }
        Ok(Self {
            indices,
            policy,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Global node indices, sorted ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

/// The master's distilled output: one representative pilot per cluster plus
/// the master-side labels of every pilot. Only the representative positions
/// cross the wire; the label vector stays on the master for final gathering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoCenters {
    /// For each cluster `c`, the position within the pilot set of its
    /// representative. Distinct, each `< l`.
    pub pilot_local_indices: Vec<usize>,
    /// Cluster label of every pilot, length `l`.
    pub master_labels: Vec<usize>,
}

/// Integer apportionment by the largest-remainder rule: `out[i]` is
/// `total · weights[i] / Σ weights` rounded so the counts sum to `total`
/// exactly. Remainder units go to the largest fractional parts, ties to the
/// smallest index.
pub(crate) fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    debug_assert!(sum > 0.0, "weights must not all be zero");
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = quotas[i] - quotas[i].floor();
        let fj = quotas[j] - quotas[j].floor();
        fj.partial_cmp(&fi).unwrap().then(i.cmp(&j))
    });
    for &i in order.iter().take(total - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Samples `l` pilot nodes out of `num_nodes`.
///
/// Stratified mode draws within each block a count apportioned from the
/// block sizes (largest-remainder rounding), which requires ground truth;
/// uniform mode is a simple random sample. When truth is supplied, `l` must
/// be at least the number of blocks — fewer pilots than communities cannot
/// anchor them all. Without truth the check is impossible and deferred to
/// the master clustering step, which rejects `l < k` outright.
pub fn sample_pilots(
    num_nodes: usize,
    l: usize,
    policy: PilotPolicy,
    truth: Option<&GroundTruth>,
    seed: u64,
) -> Result<PilotSet> {
    if l == 0 || l > num_nodes {
        return Err(Error::InvalidParameter(format!(
            "pilot count {l} must be in 1..={num_nodes}"
        )));
    }
    if let Some(t) = truth {
        if t.len() != num_nodes {
            return Err(Error::ShapeMismatch {
                expected: format!("{num_nodes} labels"),
                got: format!("{}", t.len()),
            });
        }
        if l < t.num_blocks() {
            return Err(Error::InvalidParameter(format!(
                "pilot count {l} is below the block count {}",
                t.num_blocks()
            )));
        }
    }
    let mut r = rng(seed);
    let indices = match policy {
        PilotPolicy::Uniform => {
            let mut v = rand::seq::index::sample(&mut r, num_nodes, l).into_vec();
            v.sort_unstable();
            v
        }
        PilotPolicy::Stratified => {
            let t = truth.ok_or_else(|| {
                Error::InvalidParameter(
                    "stratified pilot sampling requires ground-truth labels".into(),
                )
            })?;
            let k = t.num_blocks();
            let weights: Vec<f64> = t.block_counts().iter().map(|&c| c as f64).collect();
            let per_block = largest_remainder(&weights, l);
            let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
            for (i, &g) in t.labels().iter().enumerate() {
                members[g].push(i);
            }
            let mut v = Vec::with_capacity(l);
            for blk in 0..k {
                debug_assert!(per_block[blk] <= members[blk].len());
                let picks = rand::seq::index::sample(&mut r, members[blk].len(), per_block[blk]);
                for p in picks.iter() {
                    v.push(members[blk][p]);
                }
            }
            v.sort_unstable();
            v
        }
    };
    PilotSet::from_indices(indices, policy, seed, num_nodes)
}

/// Nearest-member representative per cluster: for each cluster `c`, the row
/// assigned to `c` that lies closest (squared Euclidean) to center `c`, ties
/// to the smallest row index.
pub(crate) fn select_representatives(
    eigvecs: &Array2<f64>,
    labels: &[usize],
    centers: &Array2<f64>,
) -> Vec<usize> {
    let k = centers.nrows();
    let dim = centers.ncols();
    let mut best: Vec<Option<(f64, usize)>> = vec![None; k];
    for (i, &c) in labels.iter().enumerate() {
        let mut d2 = 0.0;
        for j in 0..dim {
            let t = eigvecs[[i, j]] - centers[[c, j]];
            d2 += t * t;
        }
        match best[c] {
            Some((bd, _)) if d2 >= bd => {}
            _ => best[c] = Some((d2, i)),
        }
    }
    best.into_iter()
        .map(|b| b.expect("k-means leaves no cluster empty").1)
        .collect()
}

/// Clusters the pilot subgraph and picks one representative pilot per
/// cluster.
///
/// Embedding and clustering are exactly the full-graph baseline run on the
/// pilot subgraph; returns the `l x k` pilot embedding alongside the centers.
/// The representative of cluster `c` is the member pilot nearest the
/// cluster's k-means center (ties to the smallest local index). Restricting
/// the search to the cluster's own members keeps each representative labeled
/// with the cluster it stands for and makes the `k` picks distinct by
/// construction; an unrestricted nearest-row search could, on degenerate
/// embeddings, hand two clusters the same pilot.
pub fn master_cluster(
    a0: &SparseGraph,
    k: usize,
    seed: u64,
) -> Result<(Array2<f64>, PseudoCenters)> {
    let (eigvecs, labels, centers, _isolated) = embed_and_cluster(a0, k, seed)?;
    let pilot_local_indices = select_representatives(&eigvecs, &labels, &centers);
    Ok((
        eigvecs,
        PseudoCenters {
            pilot_local_indices,
            master_labels: labels,
        },
    ))
}
