//! Numerical pipeline for the renormalized Chern-Gauss-Bonnet integrand and the
//! Burns-Epstein invariant of strictly pseudoconvex domains in `C^2` and `C^3`.

// Tensor code indexes several arrays by the same frame index.
#![allow(clippy::needless_range_loop)]

pub mod curvature;
pub mod domains;
pub mod error;
pub mod forms;
pub mod frames;
pub mod invariants;
pub mod jets;
pub mod monge_ampere;
pub mod quadrature;
pub mod transgression;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
