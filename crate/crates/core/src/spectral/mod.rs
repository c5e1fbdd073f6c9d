//! Spectral primitives: normalized Laplacians, truncated symmetric
//! eigendecomposition, Gram-trick SVD, k-means, and Procrustes alignment.

mod eig;
mod kmeans;
mod laplacian;
mod procrustes;
mod svd;

pub use eig::{dense_top_k, lanczos_top_k, top_k_eig_sym, EigPair, DENSE_CUTOFF, RESIDUAL_TOL};
pub(crate) use eig::magnitude_order;
pub use kmeans::{kmeans, MAX_ITERS, REL_TOL, RESTARTS};
pub use laplacian::{laplacian_rect, laplacian_square, DegenerateAxes};
pub use procrustes::procrustes_align;
pub use svd::{gram_svd, SvdTriple, TOL_SIGMA_REL};
