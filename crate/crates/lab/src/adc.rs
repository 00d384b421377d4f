//! Oversampled analog-to-digital conversion of periodic bandlimited signals.
//!
//! Signals are real trigonometric polynomials of degree `B` on `[0, 1)`.
//! The sample stream covers `P` whole periods at `m = 2Bλ` samples per
//! period and is reconstructed with a `P`-periodic kernel
//!
//! ```text
//! ψ(t) = (1/P) Σ_j ĝ(j/P) e^{2πijt/P}
//! ```
//! so that `x(t) = τ Σ_n x(nτ) ψ(t − nτ)` holds exactly for unquantized
//! samples. Errors are measured on the central period only, away from the
//! point where the quantizer state starts from zero.

use std::f64::consts::PI;

use noiseshape::noise_shaping::{greedy_quantize, msq_quantize, Alphabet, QuantizationResult, TransferOperator};
use noiseshape::seed;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{config, LabResult};

/// Dense evaluation factor relative to the sampling grid.
pub const EVAL_OVERSAMPLE: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicBandlimited {
    /// `c_n` for `n = 0..=B`; negative modes are the conjugates.
    coeffs: Vec<Complex64>,
}

impl PeriodicBandlimited {
    pub fn new(mut coeffs: Vec<Complex64>) -> LabResult<Self> {
        if coeffs.is_empty() {
            return Err(config("signal needs at least the constant mode"));
        }
        coeffs[0].im = 0.0;
        Ok(Self { coeffs })
    }

    /// Gaussian coefficients rescaled so the sup over a fine grid equals `amplitude`.
    pub fn random(bandwidth: usize, amplitude: f64, seed: u64) -> LabResult<Self> {
        if bandwidth == 0 {
            return Err(config("bandwidth must be at least 1"));
        }
        let mut rng = seed::rng(seed);
        let coeffs: Vec<Complex64> = (0..=bandwidth)
            .map(|n| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                if n == 0 {
                    Complex64::new(re, 0.0)
                } else {
                    Complex64::new(re, im)
                }
            })
            .collect();
        let raw = Self::new(coeffs)?;
        let sup = raw.sup_norm();
        let scale = if sup > 0.0 { amplitude / sup } else { 0.0 };
        Self::new(raw.coeffs.iter().map(|c| c * scale).collect())
    }

    pub fn bandwidth(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = self.coeffs[0].re;
        for (n, c) in self.coeffs.iter().enumerate().skip(1) {
            let (s, co) = (2.0 * PI * n as f64 * t).sin_cos();
            acc += 2.0 * (c.re * co - c.im * s);
        }
        acc
    }

    /// Max of `|x|` over `16 (2B + 1)` equispaced points of one period.
    pub fn sup_norm(&self) -> f64 {
        let n = EVAL_OVERSAMPLE * (2 * self.bandwidth() + 1);
        (0..n).map(|i| self.eval(i as f64 / n as f64).abs()).fold(0.0, f64::max)
    }
}

/// Uniform sampler over `periods` whole periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampler {
    bandwidth: usize,
    per_period: usize,
    periods: usize,
}

impl Sampler {
    /// `m = 2Bλ` samples per period; `λ` is the ratio to the critical rate `2B`.
    pub fn new(bandwidth: usize, lambda: f64, periods: usize) -> LabResult<Self> {
        if bandwidth == 0 || periods == 0 {
            return Err(config("bandwidth and period count must be positive"));
        }
        if !(lambda >= 1.0) {
            return Err(config(format!("oversampling ratio must be at least 1, got {lambda}")));
        }
        let m = 2.0 * bandwidth as f64 * lambda;
        if (m - m.round()).abs() > 1e-9 {
            return Err(config(format!("2 * B * lambda = {m} is not an integer")));
        }
        Ok(Self { bandwidth, per_period: m.round() as usize, periods })
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn per_period(&self) -> usize {
        self.per_period
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn len(&self) -> usize {
        self.per_period * self.periods
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tau(&self) -> f64 {
        1.0 / self.per_period as f64
    }

    pub fn oversampling(&self) -> f64 {
        self.per_period as f64 / (2.0 * self.bandwidth as f64)
    }

    pub fn sample(&self, x: &PeriodicBandlimited) -> Vec<f64> {
        let tau = self.tau();
        (0..self.len()).map(|n| x.eval(n as f64 * tau)).collect()
    }

    /// Start of the period used for error measurements.
    pub fn central_offset(&self) -> f64 {
        (self.periods / 2) as f64
    }

    /// `16 m` points covering the central period.
    pub fn central_grid(&self) -> Vec<f64> {
        let n = EVAL_OVERSAMPLE * self.per_period;
        let c = self.central_offset();
        (0..n).map(|i| c + i as f64 / n as f64).collect()
    }
}

/// Raised-cosine low-pass response: flat on `|ξ| ≤ B`, zero beyond `(1 + ε₀)B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionKernel {
    bandwidth: usize,
    eps0: f64,
}

impl ReconstructionKernel {
    pub fn new(bandwidth: usize, eps0: f64) -> LabResult<Self> {
        if bandwidth == 0 || !(eps0 > 0.0 && eps0.is_finite()) {
            return Err(config("kernel needs bandwidth >= 1 and a positive transition width"));
        }
        Ok(Self { bandwidth, eps0 })
    }

    pub fn cutoff(&self) -> f64 {
        (1.0 + self.eps0) * self.bandwidth as f64
    }

    pub fn response(&self, xi: f64) -> f64 {
        let a = xi.abs();
        let b = self.bandwidth as f64;
        if a <= b {
            1.0
        } else if a >= self.cutoff() {
            0.0
        } else {
            0.5 * (1.0 + (PI * (a - b) / (self.eps0 * b)).cos())
        }
    }

    /// The kernel reproduces the band and passes nothing beyond `1/(2τ)`.
    pub fn admissible(&self, sampler: &Sampler) -> bool {
        self.bandwidth == sampler.bandwidth && self.cutoff() <= sampler.per_period as f64 / 2.0
    }
}

/// Kernel reconstruction for one sampler.
#[derive(Debug, Clone)]
pub struct Reconstructor {
    sampler: Sampler,
    kernel: ReconstructionKernel,
    /// `ĝ(j/P)` for `j = 0..=J`.
    weights: Vec<f64>,
}

impl Reconstructor {
    pub fn new(sampler: Sampler, kernel: ReconstructionKernel) -> LabResult<Self> {
        if !kernel.admissible(&sampler) {
            return Err(config(format!(
                "kernel cutoff {} exceeds half the sampling rate {}",
                kernel.cutoff(),
                sampler.per_period as f64 / 2.0
            )));
        }
        let p = sampler.periods as f64;
        let top = (kernel.cutoff() * p).floor() as usize;
        let weights = (0..=top).map(|j| kernel.response(j as f64 / p)).collect();
        Ok(Self { sampler, kernel, weights })
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    pub fn kernel(&self) -> &ReconstructionKernel {
        &self.kernel
    }

    /// `ψ(s)` for the periodized kernel.
    pub fn psi(&self, s: f64) -> f64 {
        let p = self.sampler.periods as f64;
        let mut acc = self.weights[0];
        for (j, &w) in self.weights.iter().enumerate().skip(1) {
            acc += 2.0 * w * (2.0 * PI * j as f64 * s / p).cos();
        }
        acc / p
    }

    /// `τ Σ_n s_n ψ(t − nτ)` at each point.
    pub fn reconstruct(&self, stream: &[f64], points: &[f64]) -> LabResult<Vec<f64>> {
        if stream.len() != self.sampler.len() {
            return Err(config(format!("stream has {} samples, sampler expects {}", stream.len(), self.sampler.len())));
        }
        let spectrum = dft(stream);
        let p = self.sampler.periods as f64;
        let scale = self.sampler.tau() / p;
        let ws: Vec<(f64, Complex64)> = self.weights.iter().enumerate().map(|(j, &w)| (w, spectrum[j])).collect();
        Ok(points
            .iter()
            .map(|&t| {
                let mut acc = ws[0].0 * ws[0].1.re;
                for (j, &(w, s)) in ws.iter().enumerate().skip(1) {
                    if w == 0.0 {
                        continue;
                    }
                    let (sn, co) = (2.0 * PI * j as f64 * t / p).sin_cos();
                    acc += 2.0 * w * (s.re * co - s.im * sn);
                }
                scale * acc
            })
            .collect())
    }

    /// `max |x(t) − (Ψs)(t)|` over the central period.
    pub fn sup_error(&self, x: &PeriodicBandlimited, stream: &[f64]) -> LabResult<f64> {
        let grid = self.sampler.central_grid();
        let rec = self.reconstruct(stream, &grid)?;
        Ok(grid.iter().zip(&rec).map(|(&t, &r)| (x.eval(t) - r).abs()).fold(0.0, f64::max))
    }

    /// `∫₀^P |ψ⁽ʳ⁾(t)| dt`, evaluated on `1024 (2J + 1)` points.
    pub fn psi_derivative_l1(&self, r: u32) -> f64 {
        let p = self.sampler.periods as f64;
        let top = self.weights.len() - 1;
        let g = 1024 * (2 * top + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); g];
        for (j, &w) in self.weights.iter().enumerate() {
            let d = Complex64::new(0.0, 2.0 * PI * j as f64 / p).powu(r);
            buf[j] += d * w / p;
            if j > 0 {
                buf[g - j] += d.conj() * w / p;
            }
        }
        FftPlanner::new().plan_fft_inverse(g).process(&mut buf);
        buf.iter().map(|v| v.re.abs()).sum::<f64>() * p / g as f64
    }

    /// `‖u‖∞ ‖ψ⁽ʳ⁾‖₁ τʳ`, the sup-error bound for an `r`-th order scheme.
    pub fn shaped_bound(&self, u_inf: f64, r: u32) -> f64 {
        u_inf * self.psi_derivative_l1(r) * self.sampler.tau().powi(r as i32)
    }

    /// `max_t τ Σ_n |ψ(t − nτ)|`, the constant in the MSQ bound `C ‖y − q‖∞`.
    pub fn msq_constant(&self) -> f64 {
        let tau = self.sampler.tau();
        let n = self.sampler.len();
        (0..EVAL_OVERSAMPLE)
            .map(|i| {
                let t = i as f64 * tau / EVAL_OVERSAMPLE as f64;
                tau * (0..n).map(|k| self.psi(t - k as f64 * tau).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// DFT bin holding the signal band edge `B`.
    pub fn band_index(&self) -> usize {
        self.sampler.bandwidth * self.sampler.periods
    }
}

fn dft(v: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = v.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// `|DFT(e)_j| / n` for `j = 0..=n/2`.
pub fn noise_spectrum(e: &[f64]) -> Vec<f64> {
    if e.is_empty() {
        return Vec::new();
    }
    let n = e.len();
    dft(e).iter().take(n / 2 + 1).map(|c| c.norm() / n as f64).collect()
}

fn bin_weight(j: usize, bins: usize, n_even: bool) -> f64 {
    if j == 0 || (n_even && j + 1 == bins) {
        1.0
    } else {
        2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEnergy {
    pub inband: f64,
    pub total: f64,
}

impl BandEnergy {
    pub fn fraction(&self) -> f64 {
        if self.total > 0.0 {
            self.inband / self.total
        } else {
            0.0
        }
    }
}

/// Energy of a one-sided spectrum from [`noise_spectrum`] of a length-`n`
/// sequence, in bins `0..=band` and in total.
pub fn inband_energy(spectrum: &[f64], band: usize, n: usize) -> BandEnergy {
    let even = n.is_multiple_of(2);
    let mut inband = 0.0;
    let mut total = 0.0;
    for (j, &a) in spectrum.iter().enumerate() {
        let e = bin_weight(j, spectrum.len(), even) * a * a;
        total += e;
        if j <= band {
            inband += e;
        }
    }
    BandEnergy { inband, total }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdcScheme {
    Msq,
    SigmaDelta(u32),
}

impl AdcScheme {
    pub fn tag(&self) -> String {
        match self {
            AdcScheme::Msq => "msq".into(),
            AdcScheme::SigmaDelta(r) => format!("sd{r}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcParams {
    pub bandwidth: usize,
    pub eps0: f64,
    pub periods: usize,
    pub amplitude: f64,
    pub levels: usize,
    pub delta: f64,
}

impl Default for AdcParams {
    fn default() -> Self {
        Self { bandwidth: 2, eps0: 0.25, periods: 5, amplitude: 0.9, levels: 5, delta: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdcOutcome {
    pub scheme: AdcScheme,
    pub sup_error: f64,
    /// `C ‖u‖∞` for MSQ, `‖u‖∞ ‖ψ⁽ʳ⁾‖₁ τʳ` for ΣΔ.
    pub bound: f64,
    pub u_inf: f64,
    pub overloaded: bool,
    pub energy: BandEnergy,
    pub spectrum: Vec<f64>,
}

/// One simulated conversion.
#[derive(Debug, Clone)]
pub struct AdcRun {
    pub signal: PeriodicBandlimited,
    pub samples: Vec<f64>,
    pub reconstructor: Reconstructor,
}

impl AdcRun {
    pub fn new(params: &AdcParams, lambda: f64, seed: u64) -> LabResult<Self> {
        let sampler = Sampler::new(params.bandwidth, lambda, params.periods)?;
        let kernel = ReconstructionKernel::new(params.bandwidth, params.eps0)?;
        let reconstructor = Reconstructor::new(sampler, kernel)?;
        let signal = PeriodicBandlimited::random(params.bandwidth, params.amplitude, seed)?;
        let samples = sampler.sample(&signal);
        Ok(Self { signal, samples, reconstructor })
    }

    /// Reconstruction error of the exact samples.
    pub fn unquantized_error(&self) -> LabResult<f64> {
        self.reconstructor.sup_error(&self.signal, &self.samples)
    }

    pub fn quantize(&self, scheme: AdcScheme, alphabet: &Alphabet) -> LabResult<QuantizationResult> {
        Ok(match scheme {
            AdcScheme::Msq => msq_quantize(&self.samples, alphabet),
            AdcScheme::SigmaDelta(r) => {
                let h = TransferOperator::power_diff(r, self.samples.len())?;
                greedy_quantize(&self.samples, &h, alphabet)?
            }
        })
    }

    pub fn run(&self, scheme: AdcScheme, alphabet: &Alphabet) -> LabResult<AdcOutcome> {
        let quant = self.quantize(scheme, alphabet)?;
        let sup_error = self.reconstructor.sup_error(&self.signal, &quant.q)?;
        let bound = match scheme {
            AdcScheme::Msq => self.reconstructor.msq_constant() * quant.u_inf,
            AdcScheme::SigmaDelta(r) => self.reconstructor.shaped_bound(quant.u_inf, r),
        };
        let e: Vec<f64> = self.samples.iter().zip(&quant.q).map(|(y, q)| y - q).collect();
        let spectrum = noise_spectrum(&e);
        let energy = inband_energy(&spectrum, self.reconstructor.band_index(), e.len());
        Ok(AdcOutcome { scheme, sup_error, bound, u_inf: quant.u_inf, overloaded: quant.overloaded, energy, spectrum })
    }
}
