use alloc::format;
use alloc::vec::Vec;
use nalgebra::DVector;
use rand::seq::index;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalKind {
    /// At most `k` nonzeros.
    Sparse,
    /// Sorted magnitudes proportional to `i^(-decay)`.
    Compressible { decay: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    x: DVector<f64>,
    support: Vec<usize>,
    sparsity: usize,
    min_mag: f64,
    kind: SignalKind,
    /// `tail_l1[k] = σ_k(x)_1`, for `k = 0..=N`.
    tail_l1: Vec<f64>,
}

impl SparseSignal {
    fn assemble(x: DVector<f64>, sparsity: usize, kind: SignalKind) -> Self {
        let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
        let min_mag = support.iter().map(|&i| x[i].abs()).fold(f64::INFINITY, f64::min);
        let min_mag = if support.is_empty() { 0.0 } else { min_mag };
        let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        let mut tail_l1 = alloc::vec![0.0; mags.len() + 1];
        for k in (0..mags.len()).rev() {
            tail_l1[k] = tail_l1[k + 1] + mags[k];
        }
        Self { x, support, sparsity, min_mag, kind, tail_l1 }
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Sorted indices of nonzero entries.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn min_mag(&self) -> f64 {
        self.min_mag
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    /// Best `k`-term approximation error in `ℓ1`.
    pub fn best_k_term_error(&self, k: usize) -> f64 {
        self.tail_l1[k.min(self.len())]
    }
}

/// `k`-sparse signal on a uniformly random support with random signs and
/// magnitudes uniform on `[min_mag, 1/√k]`, so that `‖x‖₂ ≤ 1`.
pub fn gen_sparse(n: usize, k: usize, min_mag: f64, seed: u64) -> Result<SparseSignal> {
    if k > n {
        return Err(invalid(format!("sparsity {k} exceeds dimension {n}")));
    }
    let mut x = DVector::zeros(n);
    if k > 0 {
        let cap = 1.0 / libm::sqrt(k as f64);
        if !(min_mag >= 0.0 && min_mag <= cap) {
            return Err(invalid(format!("min_mag {min_mag} must lie in [0, 1/sqrt(k)] = [0, {cap}]")));
        }
        let mut rng = seed::rng(seed);
        let mut support = index::sample(&mut rng, n, k).into_vec();
        support.sort_unstable();
        for i in support {
            let mag = min_mag + (cap - min_mag) * rng.random::<f64>();
            x[i] = if rng.random::<bool>() { mag } else { -mag };
        }
    }
    Ok(SparseSignal::assemble(x, k, SignalKind::Sparse))
}

/// Unit-norm compressible signal whose `i`-th largest magnitude is
/// proportional to `i^(-decay)`, randomly placed and signed.
pub fn gen_compressible(n: usize, decay: f64, seed: u64) -> Result<SparseSignal> {
    if n == 0 || !(decay.is_finite() && decay > 0.0) {
        return Err(invalid(format!("need n >= 1 and decay > 0, got n = {n}, decay = {decay}")));
    }
    let mags: Vec<f64> = (1..=n).map(|i| libm::pow(i as f64, -decay)).collect();
    let norm = libm::sqrt(mags.iter().map(|v| v * v).sum::<f64>());
    let mut rng = seed::rng(seed);
    let order = index::sample(&mut rng, n, n).into_vec();
    let mut x = DVector::zeros(n);
    for (rank, &i) in order.iter().enumerate() {
        let mag = mags[rank] / norm;
        x[i] = if rng.random::<bool>() { mag } else { -mag };
    }
    Ok(SparseSignal::assemble(x, n, SignalKind::Compressible { decay }))
}
