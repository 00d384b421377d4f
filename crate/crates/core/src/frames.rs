//! Analysis frames and their duals (left inverses).

use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::duals::CondensationKind;
use crate::error::{check_len, invalid, Error, Result};
use crate::linalg;
use crate::noise_shaping::{TransferOperator, TransferSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum FrameKind {
    /// `k = 2`, row `j` is `(cos 2πj/m, sin 2πj/m)`.
    RootsOfUnity,
    /// Trigonometric frame sampled on the full circle (`semicircle = false`,
    /// angles `2πj/m`) or the upper half circle (angles `πj/m`).
    ///
    /// Column `c` of row `j` is `√(2/k)·cos((c/2 + 1)θ_j)` for even `c` and
    /// `√(2/k)·sin(((c−1)/2 + 1)θ_j)` for odd `c`. The full-circle version is
    /// tight with `Φ*Φ = (m/k) I` whenever `m > k`.
    Harmonic { semicircle: bool },
    /// The `k` left singular vectors of `D^r` with the smallest singular values.
    SobolevSelfDual { order: u32 },
    /// i.i.d. standard normal entries.
    Gaussian,
    /// i.i.d. uniform ±1 entries.
    Bernoulli,
    Custom,
}

impl FrameKind {
    pub fn is_random(&self) -> bool {
        matches!(self, FrameKind::Gaussian | FrameKind::Bernoulli)
    }
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameKind::RootsOfUnity => f.write_str("roots-of-unity"),
            FrameKind::Harmonic { semicircle: false } => f.write_str("harmonic"),
            FrameKind::Harmonic { semicircle: true } => f.write_str("harmonic-semicircle"),
            FrameKind::SobolevSelfDual { order } => write!(f, "sobolev-selfdual:r={order}"),
            FrameKind::Gaussian => f.write_str("gaussian"),
            FrameKind::Bernoulli => f.write_str("bernoulli"),
            FrameKind::Custom => f.write_str("custom"),
        }
    }
}

impl FromStr for FrameKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "roots-of-unity" => FrameKind::RootsOfUnity,
            "harmonic" => FrameKind::Harmonic { semicircle: false },
            "harmonic-semicircle" => FrameKind::Harmonic { semicircle: true },
            "gaussian" => FrameKind::Gaussian,
            "bernoulli" => FrameKind::Bernoulli,
            "custom" => FrameKind::Custom,
            other => {
                let order = other
                    .strip_prefix("sobolev-selfdual:r=")
                    .and_then(|r| r.parse().ok())
                    .ok_or_else(|| invalid(format!("unknown frame kind `{other}`")))?;
                FrameKind::SobolevSelfDual { order }
            }
        })
    }
}

/// An `m × k` analysis operator whose rows are the frame vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    matrix: DMatrix<f64>,
    kind: FrameKind,
    seed: u64,
    /// `ordering[i]` is the generated row placed at position `i`.
    ordering: Vec<usize>,
}

impl Frame {
    /// Wraps an explicit matrix, checking `m ≥ k` and full column rank.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        Self::checked(matrix, FrameKind::Custom, 0)
    }

    fn checked(matrix: DMatrix<f64>, kind: FrameKind, seed: u64) -> Result<Self> {
        let (m, k) = matrix.shape();
        if k == 0 || m < k {
            return Err(invalid(format!("frame needs m >= k >= 1, got m = {m}, k = {k}")));
        }
        let s = linalg::singular_values(&matrix);
        let smax = s.iter().copied().fold(0.0, f64::max);
        let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
        let tol = linalg::rank_tolerance(&matrix, smax);
        if !(smin > tol) {
            return Err(Error::RankDeficient { sigma_min: smin, tolerance: tol });
        }
        Ok(Self { matrix, kind, seed, ordering: (0..m).collect() })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> &FrameKind {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    /// Number of frame vectors.
    pub fn m(&self) -> usize {
        self.matrix.nrows()
    }

    /// Ambient dimension.
    pub fn k(&self) -> usize {
        self.matrix.ncols()
    }

    /// `y = Φ x`.
    pub fn analyze(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(self.k(), x.len())?;
        Ok(&self.matrix * x)
    }

    /// Same frame vectors in a new measurement order: row `i` of the result
    /// is row `perm[i]` of `self`.
    pub fn reordered(&self, perm: &[usize]) -> Result<Self> {
        check_len(self.m(), perm.len())?;
        let mut seen = alloc::vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || core::mem::replace(&mut seen[p], true) {
                return Err(invalid("row ordering is not a permutation"));
            }
        }
        let matrix = DMatrix::from_fn(self.m(), self.k(), |r, c| self.matrix[(perm[r], c)]);
        let ordering = perm.iter().map(|&p| self.ordering[p]).collect();
        Ok(Self { matrix, kind: self.kind.clone(), seed: self.seed, ordering })
    }

    /// Sub-frame made of the columns in `support`.
    pub fn columns(&self, support: &[usize]) -> Result<Self> {
        if support.iter().any(|&c| c >= self.k()) {
            return Err(invalid("column index out of range"));
        }
        let sub = self.matrix.select_columns(support);
        Self::checked(sub, FrameKind::Custom, self.seed)
    }
}

/// Deterministic frame construction; random kinds draw from `seed`.
pub fn generate_frame(kind: &FrameKind, m: usize, k: usize, seed: u64) -> Result<Frame> {
    if k == 0 || m < k {
        return Err(invalid(format!("frame needs m >= k >= 1, got m = {m}, k = {k}")));
    }
    let matrix = match kind {
        FrameKind::RootsOfUnity => {
            if k != 2 {
                return Err(invalid(format!("roots-of-unity frames live in R^2, got k = {k}")));
            }
            harmonic(m, 2, 2.0 * PI / m as f64, 1.0)
        }
        FrameKind::Harmonic { semicircle } => {
            let step = if *semicircle { PI } else { 2.0 * PI } / m as f64;
            harmonic(m, k, step, libm::sqrt(2.0 / k as f64))
        }
        FrameKind::SobolevSelfDual { order } => sobolev_self_dual(*order, m, k)?,
        FrameKind::Gaussian | FrameKind::Bernoulli => random_matrix(kind, m, k, seed)?,
        FrameKind::Custom => return Err(invalid("custom frames are built with Frame::from_matrix")),
    };
    Frame::checked(matrix, kind.clone(), seed)
}

/// Random `rows × cols` matrix with i.i.d. standard normal or ±1 entries,
/// drawn in row-major order; used for frames and for wide measurement
/// matrices alike.
pub fn random_matrix(kind: &FrameKind, rows: usize, cols: usize, seed: u64) -> Result<DMatrix<f64>> {
    let mut rng = crate::seed::rng(seed);
    Ok(match kind {
        FrameKind::Gaussian => row_major(rows, cols, |_, _| rng.sample(StandardNormal)),
        FrameKind::Bernoulli => row_major(rows, cols, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 }),
        other => return Err(invalid(format!("`{other}` is not a random ensemble"))),
    })
}

/// Fill in row-major order so that a seed fixes entries regardless of storage.
fn row_major(m: usize, k: usize, mut f: impl FnMut(usize, usize) -> f64) -> DMatrix<f64> {
    let data: Vec<f64> = (0..m).flat_map(|r| (0..k).map(move |c| (r, c))).map(|(r, c)| f(r, c)).collect();
    DMatrix::from_row_slice(m, k, &data)
}

fn harmonic(m: usize, k: usize, step: f64, scale: f64) -> DMatrix<f64> {
    row_major(m, k, |j, c| {
        let freq = (c / 2 + 1) as f64;
        let theta = freq * step * j as f64;
        scale * if c % 2 == 0 { libm::cos(theta) } else { libm::sin(theta) }
    })
}

fn sobolev_self_dual(order: u32, m: usize, k: usize) -> Result<DMatrix<f64>> {
    let d = TransferOperator::power_diff(order, m)?.to_dense()?;
    let svd = d.svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors");
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let mut out = u.select_columns(&idx[..k]);
    // fix the sign convention: first nonzero entry of each column positive
    for mut col in out.column_iter_mut() {
        if let Some(&lead) = col.iter().find(|v| v.abs() > 1e-12) {
            if lead < 0.0 {
                col.neg_mut();
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DualKind {
    Canonical,
    /// `Ψ = (H⁻¹Φ)†H⁻¹`.
    InverseTransfer(TransferSpec),
    /// `Ψ = (VΦ)†V`.
    Condensed(CondensationKind),
    Custom,
}

impl fmt::Display for DualKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DualKind::Canonical => f.write_str("canonical"),
            DualKind::InverseTransfer(TransferSpec::PowerDiff { order }) => write!(f, "hinv:r={order}"),
            DualKind::InverseTransfer(spec) => write!(f, "hinv:{spec}"),
            DualKind::Condensed(kind) => write!(f, "vdual:{kind}"),
            DualKind::Custom => f.write_str("custom"),
        }
    }
}

/// A `k × m` left inverse of a frame; its columns form the synthesis frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFrame {
    matrix: DMatrix<f64>,
    kind: DualKind,
}

impl DualFrame {
    pub fn new(matrix: DMatrix<f64>, kind: DualKind) -> Self {
        Self { matrix, kind }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> &DualKind {
        &self.kind
    }

    pub fn label(&self) -> String {
        format!("{}", self.kind)
    }

    /// `‖ΨΦ − I‖2→2`.
    pub fn left_inverse_defect(&self, frame: &Frame) -> f64 {
        let k = frame.k();
        linalg::norm_2_to_2(&(&self.matrix * frame.matrix() - DMatrix::<f64>::identity(k, k)))
    }

    /// `x# = Ψ q`.
    pub fn reconstruct(&self, q: &[f64]) -> Result<DVector<f64>> {
        check_len(self.matrix.ncols(), q.len())?;
        Ok(&self.matrix * DVector::from_column_slice(q))
    }
}

/// `Φ† = (Φ*Φ)⁻¹Φ*`.
pub fn canonical_dual(frame: &Frame) -> Result<DualFrame> {
    Ok(DualFrame::new(linalg::left_pseudo_inverse(frame.matrix())?, DualKind::Canonical))
}

/// `Σ_j ‖ψ_j − ψ_{j+1}‖₂` over the dual columns with `ψ_{m+1} = 0`.
pub fn frame_variation(dual: &DualFrame) -> f64 {
    let psi = dual.matrix();
    let m = psi.ncols();
    (0..m)
        .map(|j| {
            if j + 1 < m {
                (psi.column(j) - psi.column(j + 1)).norm()
            } else {
                psi.column(j).norm()
            }
        })
        .sum()
}
