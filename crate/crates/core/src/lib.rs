//! Eigenvalue-bound workbench for Neumann-Laplace problems on planar quasidiscs.
//!
//! The crate evaluates closed-form bounds on the first nontrivial Neumann
//! eigenvalue in terms of quasiconformal geometry (hyperbolic alpha-dilatation,
//! Ahlfors constants, quasiconformality coefficients) and checks them against
//! an independent P1 finite-element eigensolver.

pub mod bounds;
pub mod capacity;
pub mod conformal;
pub mod error;
pub mod geometry;
pub mod logreal;
pub mod metrics;
pub mod quadrature;
pub mod report;
pub mod spectral;
pub mod svg;

pub use error::{Error, Result};
pub use logreal::LogReal;
