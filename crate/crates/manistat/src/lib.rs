//! Nonparametric estimation and testing of means on manifolds.
//!
//! Supports intrinsic (Karcher) means under geodesic distance and extrinsic
//! means obtained by projecting the Euclidean mean of an embedded sample.
//! Covers the sphere `S^d`, the axial space `RP^{N-1}`, the planar shape
//! space `CP^{k-2}` and the 3D tetrad shape space in Bookstein coordinates,
//! with chi-square and bootstrap confidence regions and one- and two-sample
//! mean tests.

pub mod axial;
pub mod bookstein;
pub mod dataset;
mod error;
pub mod extrinsic;
pub mod frechet;
pub mod manifold;
pub mod shape;
pub mod sphere;
pub mod stat_kernel;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
