//! Homoclinic solutions of one-dimensional fractional-Laplacian systems.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod energy;
pub mod error;
pub mod frac_ops;
pub mod grid;
pub mod linalg;
pub mod mountain_pass;
pub mod pinned;
pub mod potentials;
pub mod quad;

pub use error::{Error, Result};
