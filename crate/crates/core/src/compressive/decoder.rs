use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    Omp,
    Iht,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderSpec {
    pub kind: DecoderKind,
    /// Iteration cap; OMP additionally stops after `k` selections.
    pub iterations: usize,
    /// Target sparsity.
    pub k: usize,
    /// IHT gradient step; `None` means `1 / ‖Φ‖²`.
    pub step: Option<f64>,
    /// IHT stops once the residual moves by less than this (relative to `‖ỹ‖₂`).
    pub tolerance: f64,
}

impl DecoderSpec {
    pub fn omp(k: usize) -> Self {
        Self { kind: DecoderKind::Omp, iterations: k.max(1), k, step: None, tolerance: 1e-10 }
    }

    pub fn iht(k: usize) -> Self {
        Self { kind: DecoderKind::Iht, iterations: 500, k, step: None, tolerance: 1e-10 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(invalid("decoder needs at least one iteration"));
        }
        if let Some(s) = self.step {
            if !(s.is_finite() && s > 0.0) {
                return Err(invalid(format!("iht step must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub x: DVector<f64>,
    /// Sorted support of `x`.
    pub support: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

/// Indices of the `k` largest magnitudes, ties to the lower index, sorted.
pub fn top_k_support(v: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    order.truncate(k.min(v.len()));
    order.sort_unstable();
    order
}

/// Keeps the `k` largest-magnitude entries.
pub fn hard_threshold(v: &DVector<f64>, k: usize) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for i in top_k_support(v, k) {
        out[i] = v[i];
    }
    out
}

fn scatter(n: usize, support: &[usize], values: &DVector<f64>) -> DVector<f64> {
    let mut x = DVector::zeros(n);
    for (&i, &v) in support.iter().zip(values.iter()) {
        x[i] = v;
    }
    x
}

fn nonzero_support(x: &DVector<f64>) -> Vec<usize> {
    (0..x.len()).filter(|&i| x[i] != 0.0).collect()
}

/// Sparse estimate of `x` from `ỹ ≈ Φx`.
pub fn decode(spec: &DecoderSpec, phi: &DMatrix<f64>, y: &DVector<f64>) -> Result<DecodeOutcome> {
    spec.validate()?;
    crate::error::check_len(phi.nrows(), y.len())?;
    match spec.kind {
        DecoderKind::Omp => omp(spec, phi, y),
        DecoderKind::Iht => iht(spec, phi, y),
    }
}

fn omp(spec: &DecoderSpec, phi: &DMatrix<f64>, y: &DVector<f64>) -> Result<DecodeOutcome> {
    let n = phi.ncols();
    let norms: Vec<f64> = phi.column_iter().map(|c| c.norm()).collect();
    if norms.contains(&0.0) {
        return Err(invalid("omp needs nonzero columns"));
    }
    let floor = 1e-14 * y.norm();
    let steps = spec.k.min(spec.iterations).min(n).min(phi.nrows());
    let mut selected: Vec<usize> = Vec::new();
    let mut coef = DVector::zeros(0);
    let mut residual = y.clone();
    let mut iterations = 0;
    while selected.len() < steps && residual.norm() > floor {
        let corr = phi.transpose() * &residual;
        let mut best: Option<(usize, f64)> = None;
        for j in (0..n).filter(|j| !selected.contains(j)) {
            let score = corr[j].abs() / norms[j];
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let Some((j, _)) = best else { break };
        selected.push(j);
        let sub = phi.select_columns(&selected);
        match linalg::least_squares(&sub, y) {
            Ok(c) => {
                residual = y - &sub * &c;
                coef = c;
            }
            Err(_) => {
                selected.pop();
                break;
            }
        }
        iterations += 1;
    }
    let x = scatter(n, &selected, &coef);
    Ok(DecodeOutcome { support: nonzero_support(&x), x, iterations, converged: true })
}

fn iht(spec: &DecoderSpec, phi: &DMatrix<f64>, y: &DVector<f64>) -> Result<DecodeOutcome> {
    let n = phi.ncols();
    let step = match spec.step {
        Some(s) => s,
        None => {
            let norm = linalg::norm_2_to_2(phi);
            if norm == 0.0 {
                return Ok(DecodeOutcome { x: DVector::zeros(n), support: Vec::new(), iterations: 0, converged: true });
            }
            1.0 / (norm * norm)
        }
    };
    let tol = spec.tolerance * y.norm().max(f64::MIN_POSITIVE);
    let mut x = DVector::zeros(n);
    let mut residual = y.clone();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < spec.iterations {
        iterations += 1;
        let next = hard_threshold(&(&x + (phi.transpose() * &residual) * step), spec.k);
        let next_residual = y - phi * &next;
        let moved = (&next_residual - &residual).norm();
        x = next;
        residual = next_residual;
        if moved <= tol {
            converged = true;
            break;
        }
    }
    // least-squares refit on the final support
    let support = nonzero_support(&x);
    if !support.is_empty() {
        let sub = phi.select_columns(&support);
        if let Ok(c) = linalg::least_squares(&sub, y) {
            let refit = scatter(n, &support, &c);
            if (y - phi * &refit).norm() <= residual.norm() {
                x = refit;
            }
        }
    }
    Ok(DecodeOutcome { support: nonzero_support(&x), x, iterations, converged })
}
