use alloc::vec;
use alloc::vec::Vec;

use super::{Alphabet, TransferOperator};
use crate::error::{check_len, Result};

/// Relative slack used when deciding whether a state exceeded `δ`.
const OVERLOAD_SLACK: f64 = 1e-12;

/// Output of a noise-shaping quantizer: `y − q = H u`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationResult {
    pub q: Vec<f64>,
    pub u: Vec<f64>,
    /// Some `|u_n|` exceeded `δ`; bounds derived from `‖u‖∞ ≤ δ` do not apply.
    pub overloaded: bool,
    pub u_inf: f64,
}

impl QuantizationResult {
    fn from_parts(q: Vec<f64>, u: Vec<f64>, delta: f64) -> Self {
        let u_inf = u.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let overloaded = u_inf > delta * (1.0 + OVERLOAD_SLACK);
        Self { q, u, overloaded, u_inf }
    }

    /// `‖y − q − H u‖∞`.
    pub fn residual(&self, y: &[f64], h: &TransferOperator) -> Result<f64> {
        check_len(self.q.len(), y.len())?;
        let hu = h.apply(&self.u)?;
        Ok(y.iter()
            .zip(&self.q)
            .zip(&hu)
            .map(|((y, q), hu)| (y - q - hu).abs())
            .fold(0.0, f64::max))
    }
}

/// Greedy noise-shaping quantizer:
/// `q_n = round(y_n + Σ_j (I − H)[n, n−j] u_{n−j})`, `u_n` is the rounding
/// residual of that argument. States before the first sample are zero.
///
/// Out-of-range arguments clamp to the extreme level; the result is then
/// flagged as overloaded instead of rejected.
pub fn greedy_quantize(y: &[f64], h: &TransferOperator, alphabet: &Alphabet) -> Result<QuantizationResult> {
    check_len(h.size(), y.len())?;
    let mut q = vec![0.0; y.len()];
    let mut u = vec![0.0; y.len()];
    for n in 0..y.len() {
        let w = y[n] + h.feedback(n, &u);
        q[n] = alphabet.round(w);
        u[n] = w - q[n];
    }
    Ok(QuantizationResult::from_parts(q, u, alphabet.delta()))
}

/// Memoryless scalar quantization, i.e. the greedy rule with `H = I`.
pub fn msq_quantize(y: &[f64], alphabet: &Alphabet) -> QuantizationResult {
    let q: Vec<f64> = y.iter().map(|&v| alphabet.round(v)).collect();
    let u = y.iter().zip(&q).map(|(y, q)| y - q).collect();
    QuantizationResult::from_parts(q, u, alphabet.delta())
}
