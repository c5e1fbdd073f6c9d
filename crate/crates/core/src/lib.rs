//! Distributed spectral community detection.
//!
//! A network too large (or too scattered) for one machine is clustered in
//! three moves: a master node spectrally clusters a small set of *pilot*
//! nodes, broadcasts only the indices of one representative pilot per
//! community (*pseudo centers*), and each worker then labels its own nodes
//! by a truncated SVD of the rectangular pilot-connectivity Laplacian
//! followed by a nearest-pseudo-center rule — no iterative clustering ever
//! runs on a worker, and only `K` integers ever cross the wire.
//!
//! The crate provides the full pipeline plus everything needed to study it:
//! stochastic block model generators ([`sbm`]), spectral primitives
//! ([`spectral`]), the master/worker protocol ([`master`], [`worker`],
//! [`protocol`]), evaluation metrics ([`metrics`]), population (expected)
//! operators for exact-identity testing ([`population`]), a single-machine
//! baseline ([`sc`]), and graph IO ([`io`]).

pub mod error;
pub mod graph;
pub mod linalg;
pub mod population;
pub mod sbm;
pub mod sc;
pub mod seeding;
pub mod sparse;
pub mod spectral;

pub mod io;
pub mod master;
pub mod metrics;
pub mod protocol;
pub mod worker;

pub use error::{Error, Result};
pub use graph::SparseGraph;
pub use protocol::{run_detection, ClusteringResult, Engine, PartitionMode, PartitionPlan};
pub use sbm::{GroundTruth, SbmParams};
pub use sparse::CsrMatrix;
