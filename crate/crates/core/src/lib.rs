//! Quantum walls on the half line.
//!
//! A wall at `x = 0` is labelled by the extended-real length `L` in
//! `ψ(0) + L ψ'(0) = 0`; `L = 0` is the Dirichlet wall and `L = ∞` the
//! Neumann wall. The crate provides exact spectra and time delays, closed-form
//! propagators with a spectral oracle, step-potential regularizations,
//! classical counterpart potentials and semiclassical bounce actions.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod error;
pub mod field;
pub mod kernel;
pub mod numerics;
pub mod regularization;
pub mod spectrum;
pub mod units;
pub mod wall;
pub mod wkb;

pub use error::{Error, Result};
pub use field::{boundary_residual, ComplexField, Grid};
pub use num_complex::Complex64;
pub use units::UnitSystem;
pub use wall::{parse_wall, WallParameter};
