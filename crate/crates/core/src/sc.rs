//! Full-graph spectral clustering: the single-machine reference that the
//! distributed pipeline is measured against.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::spectral::{kmeans, laplacian_square, top_k_eig_sym};

/// Output of the full-graph baseline.
#[derive(Debug, Clone)]
pub struct BaselineOutput {
    /// Cluster label per node, in `0..k`.
    pub labels: Vec<usize>,
    /// `n x k` spectral embedding (top-k eigenvectors of the normalized
    /// adjacency).
    pub eigvecs: Array2<f64>,
    /// `k x k` k-means centers in embedding space.
    pub centers: Array2<f64>,
    /// Zero-degree nodes. They embed at the origin, so their labels are
    /// whatever the nearest-center rule yields there; callers should treat
    /// them as unclassified.
    pub isolated: Vec<usize>,
}

/// Shared embed-then-cluster kernel: normalized-adjacency Laplacian, top-k
/// eigenvectors, seeded k-means. The distributed master runs exactly this on
/// its pilot subgraph, so a master holding all `n` nodes reproduces the
/// baseline bit for bit.
///
/// Returns `(eigvecs, labels, centers, isolated)`.
pub(crate) fn embed_and_cluster(
    graph: &SparseGraph,
    k: usize,
    seed: u64,
) -> Result<(Array2<f64>, Vec<usize>, Array2<f64>, Vec<usize>)> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if graph.num_nodes() < k {
        return Err(Error::InvalidParameter(format!(
            "cannot split {} nodes into {k} clusters",
            graph.num_nodes()
        )));
    }
    let (lap, isolated) = laplacian_square(graph);
    let eig = top_k_eig_sym(&lap, k)?;
    let (labels, centers) = kmeans(&eig.vectors, k, seed)?;
    Ok((eig.vectors, labels, centers, isolated))
}

/// Spectral clustering of the whole graph.
pub fn spectral_cluster(graph: &SparseGraph, k: usize, seed: u64) -> Result<BaselineOutput> {
    let (eigvecs, labels, centers, isolated) = embed_and_cluster(graph, k, seed)?;
    Ok(BaselineOutput {
        labels,
        eigvecs,
        centers,
        isolated,
    })
}
