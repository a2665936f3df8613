//! Numeric primitives used throughout the crate: small dense symmetric and
//! Hermitian eigendecompositions, positive-definite inverse square roots,
//! chi-square quantiles and deterministic seeded resampling.

mod chi2;
mod eigen;
mod resample;

pub use chi2::{chi2_cdf, chi2_quantile};
pub use eigen::{herm_eigen, inv_sqrt_pd, sym_eigen, EigenResult, HermEigenResult};
pub use resample::{resample_plan, ReplicateRng, ResamplePlan};

/// Relative eigengap below which a covariance matrix is treated as singular.
/// Mirrors the nonsingularity hypotheses of the CLTs as a runtime check.
pub const DEGENERATE_EIGENGAP: f64 = 1e-12;
