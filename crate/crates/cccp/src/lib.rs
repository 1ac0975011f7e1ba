//! Solvers for geodesically convex problems on the positive-definite matrix
//! manifold that admit a Euclidean difference-of-convex split.
//!
//! The engine ([`solver`], [`incremental`]) runs the convex-concave procedure
//! with problem-supplied closed-form surrogate minimizers. Shipped
//! applications: matrix scaling to doubly stochastic form ([`scaling`]),
//! Tyler's M-estimator of scatter ([`tyler`]), S-divergence barycenters and
//! matrix square roots ([`sdiv`]), and Brascamp-Lieb constants ([`bl`]). A
//! Riemannian gradient-descent baseline lives in [`rgd`], and [`dcrep`]
//! numerically verifies the integral DC representation of the squared
//! Riemannian distance.

pub mod bl;
pub mod dcrep;
pub mod error;
pub mod incremental;
pub mod io;
pub mod point;
pub mod rgd;
pub mod scaling;
pub mod sdiv;
pub mod solver;
pub mod spd;
pub mod tyler;

pub use error::{Error, Result};
pub use point::{Point, PosVector};
pub use solver::{DcProblem, IterateTrace, SolverConfig};
pub use spd::{SpdMatrix, SymMatrix};

#[cfg(test)]
pub(crate) fn test_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
