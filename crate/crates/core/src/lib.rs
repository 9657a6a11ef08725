//! Sparse signal recovery from underdetermined linear measurements.
//!
//! Given `b = A x0` with `A` an m-by-n matrix (m < n) and `x0` sparse, the
//! solvers here reconstruct `x0` by iterative thresholding: a gradient step
//! on the residual followed by a per-coordinate shrinkage whose strength is
//! retuned every iteration from a target sparsity level. Three shrinkage
//! rules are provided (adaptively reweighted soft, plain soft, and half
//! thresholding), together with seeded instance generation and a benchmark
//! harness that reproduces success-rate-versus-sparsity curves.

pub mod bench;
pub mod error;
pub mod linalg;
pub mod penalty;
pub mod problem;
pub mod rng;
pub mod solver;
pub mod threshold;

pub use error::{Error, Result};
