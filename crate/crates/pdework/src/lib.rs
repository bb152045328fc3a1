//! Numerical workbench for canonical PDE model problems.
//!
//! Four classical discretizations (finite differences, linear finite
//! elements, finite volumes, Chebyshev collocation) share a small linear
//! algebra core, and a physics-informed neural network lane handles the
//! same problems in forward and inverse form. The `verify` module holds
//! manufactured solutions, reference solutions, and convergence tooling
//! used by the test suite and the command line interface.

pub mod cli;
pub mod discretize;
pub mod error;
pub mod fdm;
pub mod fem;
pub mod fvm;
pub mod linalg;
pub mod neural;
pub mod pinn;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
