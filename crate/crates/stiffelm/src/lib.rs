//! Physics-informed extreme learning machines with shifted Gaussian encoding.
//!
//! The library solves stiff linear ODEs (steady 1-D advection-diffusion) and
//! multiscale regression problems with a single convex least-squares solve
//! over a frozen random basis, and reports the conditioning of the activation
//! matrix (rank, condition number, spectrum) that governs solution quality.

pub mod assembly;
pub mod basis;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod linalg;
pub mod solver;

pub use error::{Error, Result};
