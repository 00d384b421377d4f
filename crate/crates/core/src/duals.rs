//! Alternative duals for noise shaping and the reconstruction error bounds
//! they certify.
//!
//! All duals here have the form `Ψ = (VΦ)†V` for some condensation `V`.
//! `V = H⁻¹` gives the dual minimizing `‖ΨH‖2→2`; `V = I_p ⊗ v^β` gives the
//! beta dual whose error decays like `β^{−m/p}`.

use core::fmt;

use alloc::format;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{check_len, invalid, Error, Result};
use crate::frames::{DualFrame, DualKind, Frame};
use crate::linalg::{self, InfToTwoBound};
use crate::noise_shaping::{QuantizationResult, TransferOperator, TransferSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum CondensationKind {
    /// `V = H⁻¹`, square.
    InverseTransfer(TransferSpec),
    /// `V = I_p ⊗ [β⁻¹, …, β^{−λ′}]` with `λ′ = m / p`.
    Beta { beta: f64, blocks: usize, block_len: usize },
    /// `ℓ × m` i.i.d. ±1 matrix `B`.
    BernoulliJl { seed: u64, rows: usize },
    /// `B · H⁻¹` for a Bernoulli `B`.
    BernoulliJlInverse { seed: u64, rows: usize, transfer: TransferSpec },
    Custom,
}

impl fmt::Display for CondensationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CondensationKind::InverseTransfer(spec) => write!(f, "hinv:{spec}"),
            CondensationKind::Beta { beta, blocks, .. } => write!(f, "beta={beta}:p={blocks}"),
            CondensationKind::BernoulliJl { seed, rows } => write!(f, "jl:rows={rows}:seed={seed}"),
            CondensationKind::BernoulliJlInverse { seed, rows, transfer } => {
                write!(f, "jl:rows={rows}:seed={seed}:{transfer}")
            }
            CondensationKind::Custom => f.write_str("custom"),
        }
    }
}

/// A `p × m` matrix `V` such that `VΦ` is again a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Condensation {
    matrix: DMatrix<f64>,
    kind: CondensationKind,
}

impl Condensation {
    pub fn new(matrix: DMatrix<f64>, kind: CondensationKind) -> Self {
        Self { matrix, kind }
    }

    /// `V = H⁻¹` as a dense matrix.
    pub fn inverse_transfer(h: &TransferOperator) -> Result<Self> {
        Ok(Self::new(h.inverse_dense()?, CondensationKind::InverseTransfer(h.spec().clone())))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> &CondensationKind {
        &self.kind
    }

    /// Number of condensed measurements.
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// `V q`.
    pub fn apply(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_len(self.matrix.ncols(), q.len())?;
        Ok(q.iter().enumerate().fold(alloc::vec![0.0; self.rows()], |mut acc, (j, &v)| {
            for (i, a) in acc.iter_mut().enumerate() {
                *a += self.matrix[(i, j)] * v;
            }
            acc
        }))
    }

    /// `V H`.
    pub fn shaped(&self, h: &TransferOperator) -> Result<DMatrix<f64>> {
        h.right_multiply(&self.matrix)
    }
}

/// Beta condensation `V = I_p ⊗ v^β` together with the per-entry variance
/// `σ² = β⁻² + … + β^{−2λ′}` of `VΦ` for a standard Gaussian `Φ`.
pub fn build_beta_condensation(beta: f64, blocks: usize, m: usize) -> Result<(Condensation, f64)> {
    if !(beta.is_finite() && beta > 1.0) {
        return Err(invalid(format!("beta must exceed 1, got {beta}")));
    }
    if blocks == 0 || !m.is_multiple_of(blocks) {
        return Err(Error::NotDivisible { m, p: blocks });
    }
    let block_len = m / blocks;
    let mut v = DMatrix::zeros(blocks, m);
    let mut variance = 0.0;
    let mut w = 1.0;
    for j in 0..block_len {
        w /= beta;
        variance += w * w;
        for b in 0..blocks {
            v[(b, b * block_len + j)] = w;
        }
    }
    Ok((Condensation::new(v, CondensationKind::Beta { beta, blocks, block_len }), variance))
}

/// `ℓ × m` Bernoulli embedding, row-major from `seed`.
pub fn jl_condense(seed: u64, rows: usize, m: usize) -> Result<Condensation> {
    if rows == 0 || rows > m {
        return Err(invalid(format!("embedding needs 1 <= rows <= m, got rows = {rows}, m = {m}")));
    }
    let mut rng = crate::seed::rng(seed);
    let data: Vec<f64> = (0..rows * m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    Ok(Condensation::new(DMatrix::from_row_slice(rows, m, &data), CondensationKind::BernoulliJl { seed, rows }))
}

/// `V = B H⁻¹` for the Bernoulli embedding `B = jl_condense(seed, rows, m)`.
pub fn jl_condense_inverse(seed: u64, rows: usize, h: &TransferOperator) -> Result<Condensation> {
    let b = jl_condense(seed, rows, h.size())?;
    let v = h.solve_rows(b.matrix())?;
    Ok(Condensation::new(
        v,
        CondensationKind::BernoulliJlInverse { seed, rows, transfer: h.spec().clone() },
    ))
}

/// Fixed-width bit budget for storing an embedded code `B H⁻¹ q`.
///
/// Entries are integer combinations of alphabet levels, hence lie on a grid
/// of spacing `δ` (offset by `δ` for even level counts); each is stored as an
/// index into the observed range.
pub fn jl_payload_bits(encoded: &[f64], delta: f64) -> u64 {
    if encoded.is_empty() {
        return 0;
    }
    let idx: Vec<i64> = encoded.iter().map(|v| libm::round(v / delta) as i64).collect();
    let lo = idx.iter().copied().min().unwrap_or(0);
    let hi = idx.iter().copied().max().unwrap_or(0);
    let span = (hi - lo) as u64 + 1;
    let width = 64 - (span - 1).leading_zeros() as u64;
    width.max(1) * encoded.len() as u64
}

/// `Ψ_{H⁻¹} = (H⁻¹Φ)†H⁻¹`, the dual minimizing `‖ΨH‖2→2`.
pub fn hinv_dual(frame: &Frame, h: &TransferOperator) -> Result<DualFrame> {
    check_len(frame.m(), h.size())?;
    let shaped = h.solve_columns(frame.matrix())?;
    let pinv = linalg::left_pseudo_inverse(&shaped)?;
    let psi = h.solve_rows(&pinv)?;
    Ok(DualFrame::new(restore_left_inverse(frame, psi)?, DualKind::InverseTransfer(h.spec().clone())))
}

/// `(ΨΦ)⁻¹Ψ`. Exact arithmetic leaves `Ψ` unchanged; in floating point it
/// removes the drift `ΨΦ − I` picked up through an ill-conditioned `H` or `V`.
fn restore_left_inverse(frame: &Frame, psi: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = &psi * frame.matrix();
    let sigma_min = linalg::sigma_min(&gram);
    let inv = gram.try_inverse().ok_or(Error::RankDeficient { sigma_min, tolerance: 0.0 })?;
    Ok(inv * psi)
}

/// `Ψ_V = (VΦ)†V`.
pub fn v_dual(frame: &Frame, v: &Condensation) -> Result<DualFrame> {
    check_len(frame.m(), v.matrix().ncols())?;
    let condensed = v.matrix() * frame.matrix();
    let pinv = linalg::left_pseudo_inverse(&condensed)?;
    Ok(DualFrame::new(restore_left_inverse(frame, pinv * v.matrix())?, DualKind::Condensed(v.kind().clone())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    /// `√m ‖u‖∞ / σ_min(H⁻¹Φ)` for the dual `(H⁻¹Φ)†H⁻¹`.
    InverseTransfer,
    /// `√p ‖VH‖∞→∞ ‖u‖∞ / σ_min(VΦ)` for a general `V`-dual.
    Condensed,
    /// The condensed bound specialised to beta duals, `√p β^{−λ′} ‖u‖∞ / σ_min(VΦ)`.
    Beta,
}

impl Mechanism {
    pub fn tag(&self) -> &'static str {
        match self {
            Mechanism::InverseTransfer => "hinv",
            Mechanism::Condensed => "vdual",
            Mechanism::Beta => "beta",
        }
    }
}

/// Certified upper bound on `‖x − Ψq‖₂` for a stable quantization.
///
/// `x − Ψq = (ΨH) u`, so the bound is `‖ΨH‖∞→2 ‖u‖∞` with `‖·‖∞→2` replaced
/// by the smaller of its column-sum and spectral upper bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorCertificate {
    pub mechanism: Mechanism,
    /// `m` for the inverse-transfer dual, `p` for condensations.
    pub rows: usize,
    pub u_inf: f64,
    pub sigma_min: f64,
    /// `‖VH‖∞→∞` (`1` for the inverse-transfer dual, where `VH = I`).
    pub shaped_inf_norm: f64,
    /// Bound via `√rows · ‖·‖∞→∞` or `√m ‖·‖2→2`.
    pub spectral: f64,
    /// Bound via the column-sum (`L2,1`) norm.
    pub column_sum: f64,
}

impl ErrorCertificate {
    pub fn bound(&self) -> f64 {
        self.spectral.min(self.column_sum)
    }

    pub fn holds(&self, observed: f64) -> bool {
        observed <= self.bound() * (1.0 + 1e-9) + 1e-14
    }
}

fn require_stable(quant: &QuantizationResult) -> Result<()> {
    if quant.overloaded {
        Err(Error::Overloaded)
    } else {
        Ok(())
    }
}

/// Certificate for `Ψ_{H⁻¹}` reconstruction.
pub fn certify_inverse_transfer(
    frame: &Frame,
    h: &TransferOperator,
    quant: &QuantizationResult,
) -> Result<ErrorCertificate> {
    require_stable(quant)?;
    check_len(frame.m(), h.size())?;
    let shaped = h.solve_columns(frame.matrix())?;
    let sigma_min = linalg::sigma_min(&shaped);
    let pinv = linalg::left_pseudo_inverse(&shaped)?;
    let m = frame.m();
    Ok(ErrorCertificate {
        mechanism: Mechanism::InverseTransfer,
        rows: m,
        u_inf: quant.u_inf,
        sigma_min,
        shaped_inf_norm: 1.0,
        spectral: libm::sqrt(m as f64) * quant.u_inf / sigma_min,
        column_sum: linalg::norm_l21(&pinv) * quant.u_inf,
    })
}

/// Certificate for `Ψ_V` reconstruction of a quantization with transfer `h`.
pub fn certify_condensed(
    frame: &Frame,
    v: &Condensation,
    h: &TransferOperator,
    quant: &QuantizationResult,
) -> Result<ErrorCertificate> {
    require_stable(quant)?;
    check_len(frame.m(), h.size())?;
    let condensed = v.matrix() * frame.matrix();
    let sigma_min = linalg::sigma_min(&condensed);
    let p = v.rows();
    let matched_beta = match (v.kind(), h.spec()) {
        (CondensationKind::Beta { beta, blocks, block_len }, TransferSpec::BetaBlock { beta: hb, blocks: hp }) => {
            (beta == hb && blocks == hp).then_some((*beta, *block_len))
        }
        _ => None,
    };
    // VH is exactly β^{−λ′} at the end of each block; forming it numerically
    // cancels to roundoff comparable with that value for long blocks
    let (mechanism, shaped_inf_norm, column_sum) = match matched_beta {
        Some((beta, block_len)) => {
            let tail = libm::pow(beta, -(block_len as f64));
            (Mechanism::Beta, tail, p as f64 * tail)
        }
        None => {
            let vh = v.shaped(h)?;
            (Mechanism::Condensed, linalg::norm_inf_to_inf(&vh), InfToTwoBound::of(&vh).column_sum)
        }
    };
    Ok(ErrorCertificate {
        mechanism,
        rows: p,
        u_inf: quant.u_inf,
        sigma_min,
        shaped_inf_norm,
        spectral: libm::sqrt(p as f64) * shaped_inf_norm * quant.u_inf / sigma_min,
        column_sum: column_sum * quant.u_inf / sigma_min,
    })
}
