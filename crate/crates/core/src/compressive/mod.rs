//! Compressive sampling with noise-shaped measurements.

mod decoder;
mod pipeline;
mod rip;
mod signal;

pub use decoder::{decode, hard_threshold, top_k_support, DecodeOutcome, DecoderKind, DecoderSpec};
pub use pipeline::{one_stage_condensed_reconstruct, two_stage_reconstruct, OneStageOutcome, TwoStageOutcome};
pub use rip::{binomial, rip_constant_bruteforce, RIP_BUDGET};
pub use signal::{gen_compressible, gen_sparse, SignalKind, SparseSignal};
