// NaN-rejecting guards are written as `!(x > 0.0)` on purpose, and the
// numeric kernels index several arrays in lockstep.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::excessive_precision)]

pub mod error;
pub mod inference;
pub mod io;
pub mod likelihood;
pub mod model;
pub mod sampler;
pub mod cli;
pub mod simulate;
pub mod verify;

pub use error::{Error, Result};
