//! Error type shared across the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building models, decomposing matrices,
/// running the detection protocol, scoring results, or reading/writing files.
#[derive(Debug, Error)]
pub enum Error {
    /// Model or operation parameters violate a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A connectivity matrix is not usable: not symmetric, entries outside
    /// [0, 1], or numerically rank deficient.
    #[error("invalid connectivity matrix: {0}")]
    InvalidConnectivity(String),

    /// Worker proportions cannot be realized with the nodes that remain
    /// after pilot removal.
    #[error("worker proportions incompatible with available nodes: {0}")]
    IncompatibleProportions(String),

    /// A decomposition needed `k` non-negligible singular values but the
    /// matrix does not have them.
    #[error("rank deficient: singular value {index} is {value:.3e}, below threshold {threshold:.3e}")]
    RankDeficient {
        index: usize,
        value: f64,
        threshold: f64,
    },

    /// An iterative eigensolver failed to reach the requested residual.
    #[error("eigensolver did not converge: {0}")]
    NonConvergence(String),

    /// k-means could not populate every cluster, even after repair.
    #[error("k-means produced an empty cluster (k = {k}, n = {n})")]
    EmptyCluster { k: usize, n: usize },

    /// A pseudo-center index fell outside the pilot range.
    #[error("pseudo-center index {index} out of range for {l} pilot rows")]
    InvalidCenters { index: usize, l: usize },

    /// Matrix shapes do not line up for the requested operation.
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    /// A worker task failed; the worker id is preserved for diagnostics.
    #[error("worker {worker_id} failed: {source}")]
    WorkerFailed {
        worker_id: usize,
        #[source]
        source: Box<Error>,
    },

    /// A protocol message could not be decoded.
    #[error("malformed message: {0}")]
    MalformedMessage(String),

    /// Relative density is undefined: fewer than two non-empty clusters.
    #[error("relative density undefined: fewer than two non-empty clusters")]
    NotEnoughClusters,

    /// Relative density is undefined: no within-cluster pair exists.
    #[error("relative density undefined: no within-cluster node pair")]
    NoWithinPairs,

    /// Relative density is undefined: the within-cluster density is zero.
    #[error("relative density undefined: within-cluster density is zero")]
    ZeroWithinDensity,

    /// An edge-list file contained no edges.
    #[error("edge list produced an empty graph")]
    EmptyGraph,

    /// An I/O error with the offending path attached.
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A text input (edge list, label file, config) failed to parse.
    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// A label file does not cover every node of the graph.
    #[error("labels missing for {count} node(s), e.g. ids {examples:?}")]
    MissingLabels { count: usize, examples: Vec<u64> },

    /// Result persistence was asked to write an empty result.
    #[error("refusing to save an empty result")]
    EmptyResult,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
