#![no_std]
// comparisons are negated on purpose so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Noise-shaping quantization for frame expansions and compressive samples.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod noise_shaping;
pub mod seed;

pub use error::{Error, Result};
pub mod duals;
pub mod frames;
pub mod linalg;
pub mod compressive;
