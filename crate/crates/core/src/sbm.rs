//! Stochastic block models: parameters, ground-truth labels, connectivity
//! construction, and seeded graph sampling.
//!
//! A model over `N` nodes with `K` blocks of sizes `m_k` places an edge
//! between nodes `i != j` independently with probability `B[g_i][g_j]`,
//! where `g_i` is the block of node `i` and `B` is a symmetric `K x K`
//! connectivity matrix.

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::linalg;
use crate::seeding;
use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Binomial, Distribution};

/// Parameters of a stochastic block model.
#[derive(Debug, Clone)]
pub struct SbmParams {
    num_nodes: usize,
    block_sizes: Vec<usize>,
    connectivity: Array2<f64>,
}

impl SbmParams {
    /// Validates and stores model parameters.
    ///
    /// `connectivity` must be symmetric with entries in `[0, 1]` and have
    /// full rank (smallest singular value above `1e-12`); block sizes must
    /// be positive and sum to `num_nodes`.
    pub fn new(
        num_nodes: usize,
        block_sizes: Vec<usize>,
        connectivity: Array2<f64>,
    ) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::InvalidParameter("num_nodes must be positive".into()));
        }
        if block_sizes.is_empty() {
            return Err(Error::InvalidParameter("need at least one block".into()));
        }
        if block_sizes.iter().any(|&m| m == 0) {
            return Err(Error::InvalidParameter("block sizes must be positive".into()));
        }
        if block_sizes.iter().sum::<usize>() != num_nodes {
            return Err(Error::InvalidParameter(format!(
                "block sizes sum to {}, expected {num_nodes}",
                block_sizes.iter().sum::<usize>()
            )));
        }
        let k = block_sizes.len();
        if connectivity.dim() != (k, k) {
            return Err(Error::InvalidConnectivity(format!(
                "expected {k}x{k}, got {}x{}",
                connectivity.nrows(),
                connectivity.ncols()
            )));
        }
        for i in 0..k {
            for j in 0..k {
                let b = connectivity[[i, j]];
                if !(0.0..=1.0).contains(&b) {
                    return Err(Error::InvalidConnectivity(format!(
                        "entry ({i}, {j}) = {b} outside [0, 1]"
                    )));
                }
                if (b - connectivity[[j, i]]).abs() > 1e-12 {
                    return Err(Error::InvalidConnectivity("matrix not symmetric".into()));
                }
            }
        }
        let (_, sigma_min) = linalg::singular_extremes(&connectivity)?;
        if sigma_min <= 1e-12 {
            return Err(Error::InvalidConnectivity(format!(
                "rank deficient: smallest singular value {sigma_min:.3e}"
            )));
        }
        Ok(Self {
            num_nodes,
            block_sizes,
            connectivity,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn connectivity(&self) -> &Array2<f64> {
        &self.connectivity
    }

    /// Splits `num_nodes` into `k` near-equal positive block sizes
    /// (larger blocks first when the division is uneven).
    pub fn even_blocks(num_nodes: usize, k: usize) -> Vec<usize> {
        let base = num_nodes / k;
        let extra = num_nodes % k;
        (0..k).map(|i| base + usize::from(i < extra)).collect()
    }
}

/// True block labels of a graph's nodes, 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    labels: Vec<usize>,
    num_blocks: usize,
}

impl GroundTruth {
    /// Validates that labels lie in `0..num_blocks` and every block occurs.
    pub fn new(labels: Vec<usize>, num_blocks: usize) -> Result<Self> {
        if num_blocks == 0 || labels.is_empty() {
            return Err(Error::InvalidParameter(
                "labels and block count must be non-empty".into(),
            ));
        }
        let mut seen = vec![false; num_blocks];
        for &g in &labels {
            if g >= num_blocks {
                return Err(Error::InvalidParameter(format!(
                    "label {g} out of range for {num_blocks} blocks"
                )));
            }
            seen[g] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidParameter(format!(
                "block {missing} has no members"
            )));
        }
        Ok(Self { labels, num_blocks })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of nodes carrying each label.
    pub fn block_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_blocks];
        for &g in &self.labels {
            counts[g] += 1;
        }
        counts
    }
}

/// Builds the one-parameter connectivity family
/// `B = nu * (lambda * I + (1 - lambda) * 1 1ᵀ)`:
/// diagonal entries `nu`, off-diagonal entries `nu * (1 - lambda)`.
///
/// `nu` sets the overall edge intensity and `lambda` the within/between
/// contrast (`lambda = 1` gives disconnected blocks in expectation,
/// `lambda = 0` removes all block structure).
pub fn make_connectivity(nu: f64, lambda: f64, k: usize) -> Result<Array2<f64>> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&nu) || !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "nu = {nu} and lambda = {lambda} must lie in [0, 1]"
        )));
    }
    let off = nu * (1.0 - lambda);
    Ok(Array2::from_shape_fn(
        (k, k),
        |(i, j)| if i == j { nu } else { off },
    ))
}

/// Per-worker block proportions with a tunable unbalance level.
///
/// Row `m` (0-based here; the formula below is stated 1-based) is
/// `pi_mk = 1/K + (k - (K+1)/2) * sign(m - (M+1)/2) * alpha / (K(K-1))`,
/// so `alpha = 0` gives uniform rows, and growing `alpha` skews the first
/// half of the workers towards low blocks and the second half towards high
/// blocks, with the middle worker (odd `M`) staying uniform. Every row sums
/// to 1.
pub fn unbalanced_proportions(k: usize, m: usize, alpha: f64) -> Result<Array2<f64>> {
    if k < 2 {
        return Err(Error::InvalidParameter(
            "need at least two blocks for proportions".into(),
        ));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one worker".into()));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} must lie in [0, 1)"
        )));
    }
    let kf = k as f64;
    let scale = alpha / (kf * (kf - 1.0));
    let mut pi = Array2::zeros((m, k));
    for mi in 0..m {
        let sgn = ((mi + 1) as f64 - (m as f64 + 1.0) / 2.0).signum();
        let sgn = if (mi + 1) * 2 == m + 1 { 0.0 } else { sgn };
        for ki in 0..k {
            let dev = ((ki + 1) as f64 - (kf + 1.0) / 2.0) * sgn * scale;
            let p = 1.0 / kf + dev;
            if p <= 0.0 || p >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "alpha = {alpha} drives proportion ({mi}, {ki}) to {p}, outside (0, 1)"
                )));
            }
            pi[[mi, ki]] = p;
        }
    }
    Ok(pi)
}

/// Samples a graph from the model.
///
/// Labels assign the first `m_1` node indices to block 0, the next `m_2` to
/// block 1, and so on. For every ordered block pair the number of edges is
/// drawn from the exact binomial distribution over candidate pairs, and that
/// many distinct pairs are then placed uniformly at random, so sampling costs
/// O(edges) instead of O(N²). Output is fully determined by `seed`.
pub fn sample_sbm(params: &SbmParams, seed: u64) -> (SparseGraph, GroundTruth) {
    let mut rng = seeding::rng(seed);
    let k = params.num_blocks();
    let sizes = params.block_sizes();
    // Block start offsets; block b owns nodes offsets[b]..offsets[b] + sizes[b].
    let mut offsets = vec![0usize; k];
    for b in 1..k {
        offsets[b] = offsets[b - 1] + sizes[b - 1];
    }

    let mut edges: Vec<(usize, usize)> = Vec::new();
    for a in 0..k {
        for b in a..k {
            let p = params.connectivity()[[a, b]];
            let candidates = if a == b {
                sizes[a] * (sizes[a] - 1) / 2
            } else {
                sizes[a] * sizes[b]
            };
            if candidates == 0 || p == 0.0 {
                continue;
            }
            let count = Binomial::new(candidates as u64, p)
                .expect("probability validated in SbmParams")
                .sample(&mut rng) as usize;
            for t in sample_distinct(&mut rng, candidates, count) {
                let (i, j) = if a == b {
                    let (r, c) = triangular_pair(sizes[a], t);
                    (offsets[a] + r, offsets[a] + c)
                } else {
                    (offsets[a] + t / sizes[b], offsets[b] + t % sizes[b])
                };
                edges.push((i, j));
            }
        }
    }

    let (graph, stats) =
        SparseGraph::from_edges(params.num_nodes(), &edges).expect("generated edges are in range");
    debug_assert_eq!(stats.self_loops_dropped, 0);
    debug_assert_eq!(stats.duplicates_collapsed, 0);

    let mut labels = Vec::with_capacity(params.num_nodes());
    for (b, &m) in sizes.iter().enumerate() {
        labels.extend(std::iter::repeat(b).take(m));
    }
    let truth = GroundTruth::new(labels, k).expect("block sizes are positive");
    (graph, truth)
}

/// Draws `count` distinct values from `0..n` (Floyd's algorithm); order of
/// the result is irrelevant to callers.
fn sample_distinct(rng: &mut seeding::Rng, n: usize, count: usize) -> Vec<usize> {
    debug_assert!(count <= n);
    let mut chosen = std::collections::HashSet::with_capacity(count * 2);
    let mut out = Vec::with_capacity(count);
    for idx in (n - count)..n {
        let t = rng.gen_range(0..=idx);
        let pick = if chosen.insert(t) { t } else { idx };
        if pick != t {
            chosen.insert(pick);
        }
        out.push(pick);
    }
    out
}

/// Decodes position `t` of the lexicographic enumeration of pairs
/// `(r, c)` with `0 <= r < c < n`.
fn triangular_pair(n: usize, t: usize) -> (usize, usize) {
    // Pairs with first element r occupy a block of size n - 1 - r starting
    // at cum(r) = r(2n - r - 1)/2; invert with the quadratic formula and
    // correct any floating-point slip.
    let cum = |r: usize| r * (2 * n - r - 1) / 2;
    let tf = t as f64;
    let nf = n as f64;
    let mut r = ((2.0 * nf - 1.0 - ((2.0 * nf - 1.0).powi(2) - 8.0 * tf).sqrt()) / 2.0) as usize;
    r = r.min(n - 2);
    while cum(r) > t {
        r -= 1;
    }
    while r + 1 <= n - 2 && cum(r + 1) <= t {
        r += 1;
    }
    let c = r + 1 + (t - cum(r));
    debug_assert!(c < n);
    (r, c)
}
