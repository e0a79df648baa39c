//! Gaussian random series F = Σ g_n c_n e_n over orthonormal eigenbases.
//!
//! The radial Bessel eigenfunctions of the Laplacian on the unit ball D^d
//! are built in [`basis`], on top of the special functions in [`specfun`]
//! and the weighted quadrature in [`quad`]. [`series`] samples truncated
//! series with reproducible complex Gaussian coefficients, and
//! [`analysis`] turns the L^p theory of these series into computations:
//! expected L^p norms, convergence/divergence verdicts, brackets for the
//! critical exponent, and the Gibbs weight of the cubic NLS on the disc.
//!
//! Complex Gaussians follow the convention X = X₁ + iX₂ with X₁, X₂
//! independent standard normals, so E|g|² = 2. Every moment constant in
//! this crate depends on that choice.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod basis;
pub mod error;
pub mod quad;
pub mod rng;
pub mod series;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};

/// Crate version, echoed into every manifest and report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
