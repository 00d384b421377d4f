//! Experiments, file formats and the ADC simulator built on `noiseshape`.
// comparisons are negated on purpose so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adc;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod formats;

pub use error::{LabError, LabResult};
