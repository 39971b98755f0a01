//! Deterministic and random linear-algebra and distribution primitives:
//! Cholesky factorization, multivariate-normal and inverse-Wishart
//! sampling, conditionals of partitioned normals, and the standard-normal
//! quantile. Everything is pure given an explicit [`RngStream`], so callers
//! may parallelize freely with distinct streams.

mod distributions;
mod matrix;
mod quantile;
mod rng;

pub use distributions::{sample_inverse_wishart, sample_mvn, sample_mvn_exact_moments, WishartSpec};
pub use matrix::{cholesky, conditional_mvn, Matrix, MvnParams, SpdMatrix};
pub use quantile::{normal_cdf, normal_pdf, normal_quantile};
pub use rng::RngStream;

/// Three performance indices, one per keyword matching type.
pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatError {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("degrees of freedom {dof} too small for dimension {dim}")]
    InvalidDof { dof: f64, dim: usize },
    #[error("probability {0} outside (0, 1)")]
    OutOfRange(f64),
    #[error("conditioning on all coordinates leaves nothing to sample")]
    EmptyComplement,
    #[error("observed index set is empty, unsorted, or out of bounds")]
    InvalidIndexSet,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite value where a finite one is required")]
    NonFinite,
}
