//! Two-dimensional ambipolar electrodiffusion toolkit.
//!
//! * [`grid`]: node grids, field containers and finite-difference stencils.
//! * [`nondim`]: physical parameters, scales and the dimensionless problem.
//! * [`ambipolar`]: explicit solver for the dimensionless ambipolar equation.
//! * [`field`]: recovery of the ambipolar electric field from a concentration.
//! * [`fullsystem`]: two-species drift–diffusion–Poisson reference solver and
//!   quasineutrality diagnostics.
//! * [`snapshot`], [`config`], [`scenario`]: the file formats and the run
//!   orchestration behind the `ambidiff` binary.

pub mod ambipolar;
pub mod config;
pub mod error;
pub mod field;
pub mod fullsystem;
pub mod grid;
mod linalg;
pub mod nondim;
pub mod scenario;
pub mod snapshot;

pub use error::{Error, Result};
pub use grid::{Exec, Grid2D, ScalarField, VectorField};
