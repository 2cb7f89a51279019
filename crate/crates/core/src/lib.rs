//! Numerical laboratory for the fractional porous medium equation
//! `∂ₜu + (-Δ)^s u^m = 0` on hyperbolic space with radial, nonnegative data.

// Negated comparisons are deliberate: they reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fit;
pub mod io;
pub mod kernels;
pub mod operators;
pub mod quad;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
