//! Trimodal rotational steady water waves with affine vorticity.
//!
//! The crate locates parameter values where the linearised steady water-wave
//! problem has a three-dimensional kernel spanned by modes `k1 < k2 < k3`,
//! certifies the kernel, and computes small-amplitude nonlinear waves on the
//! resulting three-parameter bifurcation sheet.

pub mod cli;
pub mod dispersion;
pub mod error;
pub mod io;
pub mod kernel_finder;
pub mod laminar;
pub mod modal_classes;
pub mod nonlinear_solver;
pub mod operator;

pub use error::{Error, Result};
