//! Quantization alphabets, transfer operators, and the greedy noise-shaping
//! quantizers built on them.

mod alphabet;
mod quantizer;
mod transfer;

pub use alphabet::Alphabet;
pub use quantizer::{greedy_quantize, msq_quantize, QuantizationResult};
pub use transfer::{difference_taps, TransferOperator, TransferSpec, DENSE_LIMIT};
