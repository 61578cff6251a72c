//! Vorticity-direction alignment diagnostics for incompressible flow on the
//! periodic box.
//!
//! The crate contains a pseudo-spectral Navier–Stokes solver, two independent
//! evaluations of the strain field (spectral and singular-integral), pointwise
//! decompositions of the vortex-stretching term, norm time series with
//! derivative checks, and the exact exponent algebra that ties the estimates
//! together.

// `!(x > 0.0)` rejects NaN as well; component loops index several arrays
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod alignment;
pub mod checkpoint;
pub mod error;
pub mod experiment;
pub mod field;
pub mod grid;
pub mod indices;
pub mod ledger;
pub mod oracles;
pub mod solver;
pub mod strain;
pub mod verify;

pub use error::{Error, Result};
pub use field::{PhysicalVector, SpectralField, VectorField};
pub use grid::Grid;
pub use solver::{SolverConfig, SolverState};
