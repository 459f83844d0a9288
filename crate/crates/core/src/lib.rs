//! Fourier-Laplace transforms of affine processes on the cone of positive
//! semidefinite matrices.

// `!(x >= 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod cli;
pub mod closedform;
pub mod model;
pub mod montecarlo;
pub mod riccati;
pub mod symcore;

pub use error::{Error, Result};
