use core::fmt;
use core::str::FromStr;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, invalid, Error, Result};

/// Largest size for which [`TransferOperator::to_dense`] materializes `H`.
pub const DENSE_LIMIT: usize = 4096;

/// Description of a noise-shaping transfer operator, independent of its size.
#[derive(Debug, Clone, PartialEq)]
pub enum TransferSpec {
    /// Lower-triangular Toeplitz convolution with `h`, `h[0] = 1`.
    Filter(Vec<f64>),
    /// The `r`-fold finite difference `D^r`.
    PowerDiff { order: u32 },
    /// `I_p ⊗ H^β`, where `H^β` is the bidiagonal filter `[1, −β]` on blocks
    /// of length `m / p`.
    BetaBlock { beta: f64, blocks: usize },
}

impl fmt::Display for TransferSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransferSpec::Filter(h) => {
                write!(f, "filter:h=")?;
                for (i, c) in h.iter().enumerate() {
                    if i > 0 {
                        write!(f, "/")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
            TransferSpec::PowerDiff { order } => write!(f, "sd:r={order}"),
            TransferSpec::BetaBlock { beta, blocks } => write!(f, "beta:beta={beta}:p={blocks}"),
        }
    }
}

impl FromStr for TransferSpec {
    type Err = Error;

    /// Parses the [`Display`](fmt::Display) forms `sd:r=2`,
    /// `beta:beta=1.5:p=2` and `filter:h=1/-0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid(format!("unrecognized transfer spec `{s}`"));
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad());
        if let Some(r) = s.strip_prefix("sd:r=") {
            return Ok(TransferSpec::PowerDiff { order: r.parse().map_err(|_| bad())? });
        }
        if let Some(h) = s.strip_prefix("filter:h=") {
            return Ok(TransferSpec::Filter(h.split('/').map(num).collect::<Result<_>>()?));
        }
        if let Some(rest) = s.strip_prefix("beta:beta=") {
            let (beta, p) = rest.split_once(":p=").ok_or_else(bad)?;
            return Ok(TransferSpec::BetaBlock { beta: num(beta)?, blocks: p.parse().map_err(|_| bad())? });
        }
        Err(bad())
    }
}

/// Signed binomial coefficients of `(1 − z)^r`.
pub fn difference_taps(order: u32) -> Vec<f64> {
    let r = order as usize;
    let mut taps = vec![0.0; r + 1];
    taps[0] = 1.0;
    for _ in 0..r {
        for j in (1..=r).rev() {
            taps[j] -= taps[j - 1];
        }
    }
    taps
}

/// Lower-triangular, unit-diagonal operator `H` in the relation `y − q = Hu`.
///
/// Every supported form is block diagonal with identical lower-triangular
/// Toeplitz blocks, so the operator is stored as `taps` (with `taps[0] = 1`)
/// and a block length. Filters and finite differences use a single block.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOperator {
    size: usize,
    block_len: usize,
    taps: Vec<f64>,
    spec: TransferSpec,
}

impl TransferOperator {
    pub fn build(spec: &TransferSpec, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(invalid("transfer operator size must be at least 1"));
        }
        let (taps, block_len) = match spec {
            TransferSpec::Filter(h) => {
                if h.first() != Some(&1.0) {
                    return Err(invalid("transfer filter must start with h[0] = 1"));
                }
                if h.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("transfer filter taps must be finite"));
                }
                (h.clone(), size)
            }
            TransferSpec::PowerDiff { order } => (difference_taps(*order), size),
            TransferSpec::BetaBlock { beta, blocks } => {
                if !(beta.is_finite() && *beta > 1.0) {
                    return Err(invalid(format!("beta must exceed 1, got {beta}")));
                }
                if *blocks == 0 || !size.is_multiple_of(*blocks) {
                    return Err(Error::NotDivisible { m: size, p: *blocks });
                }
                (vec![1.0, -beta], size / blocks)
            }
        };
        Ok(Self { size, block_len, taps, spec: spec.clone() })
    }

    pub fn identity(size: usize) -> Result<Self> {
        Self::build(&TransferSpec::Filter(vec![1.0]), size)
    }

    pub fn power_diff(order: u32, size: usize) -> Result<Self> {
        Self::build(&TransferSpec::PowerDiff { order }, size)
    }

    pub fn beta_block(beta: f64, blocks: usize, size: usize) -> Result<Self> {
        Self::build(&TransferSpec::BetaBlock { beta, blocks }, size)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn spec(&self) -> &TransferSpec {
        &self.spec
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Entry `H[row, col]`.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        if col > row || row / self.block_len != col / self.block_len {
            return 0.0;
        }
        self.taps.get(row - col).copied().unwrap_or(0.0)
    }

    /// Number of feedback taps active at position `n` (bounded by block start).
    #[inline]
    fn reach(&self, n: usize) -> usize {
        (self.taps.len() - 1).min(n % self.block_len)
    }

    /// `Σ_{j ≥ 1} (I − H)[n, n − j] · u[n − j]`, the feedback seen by sample `n`.
    #[inline]
    pub fn feedback(&self, n: usize, u: &[f64]) -> f64 {
        let mut acc = 0.0;
        for j in 1..=self.reach(n) {
            acc -= self.taps[j] * u[n - j];
        }
        acc
    }

    /// `‖I − H‖∞→∞`, the largest absolute row sum of the strictly lower part.
    pub fn strict_part_inf_norm(&self) -> f64 {
        let reach = (self.taps.len() - 1).min(self.block_len - 1);
        self.taps[1..=reach].iter().map(|c| c.abs()).sum()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.size, v.len())?;
        Ok((0..self.size).map(|n| v[n] - self.feedback(n, v)).collect())
    }

    /// `H⁻¹ v` by forward substitution.
    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.size, v.len())?;
        let mut u = vec![0.0; self.size];
        for n in 0..self.size {
            u[n] = v[n] + self.feedback(n, &u);
        }
        Ok(u)
    }

    /// `Hᵀ v`.
    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.size, v.len())?;
        let mut out = v.to_vec();
        for (n, o) in out.iter_mut().enumerate() {
            let room = self.block_len - 1 - n % self.block_len;
            for j in 1..self.taps.len().min(room + 1) {
                *o += self.taps[j] * v[n + j];
            }
        }
        Ok(out)
    }

    /// `H⁻ᵀ v` by backward substitution.
    pub fn solve_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.size, v.len())?;
        let mut x = v.to_vec();
        for n in (0..self.size).rev() {
            let room = self.block_len - 1 - n % self.block_len;
            let mut acc = x[n];
            for j in 1..self.taps.len().min(room + 1) {
                acc -= self.taps[j] * x[n + j];
            }
            x[n] = acc;
        }
        Ok(x)
    }

    /// `H⁻¹ A` computed column by column.
    pub fn solve_columns(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_len(self.size, a.nrows())?;
        let mut out = DMatrix::zeros(a.nrows(), a.ncols());
        for c in 0..a.ncols() {
            let col: Vec<f64> = a.column(c).iter().copied().collect();
            let solved = self.solve(&col)?;
            out.set_column(c, &DVector::from_vec(solved));
        }
        Ok(out)
    }

    /// `B H⁻¹` computed row by row through `H⁻ᵀ`.
    pub fn solve_rows(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.map_rows(b, Self::solve_transpose)
    }

    /// `B H` computed row by row through `Hᵀ`.
    pub fn right_multiply(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.map_rows(b, Self::apply_transpose)
    }

    fn map_rows(
        &self,
        b: &DMatrix<f64>,
        op: fn(&Self, &[f64]) -> Result<Vec<f64>>,
    ) -> Result<DMatrix<f64>> {
        check_len(self.size, b.ncols())?;
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for r in 0..b.nrows() {
            let row: Vec<f64> = b.row(r).iter().copied().collect();
            let mapped = op(self, &row)?;
            for (c, v) in mapped.into_iter().enumerate() {
                out[(r, c)] = v;
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.size > DENSE_LIMIT {
            return Err(Error::TooLarge { size: self.size, limit: DENSE_LIMIT });
        }
        Ok(DMatrix::from_fn(self.size, self.size, |r, c| self.entry(r, c)))
    }

    /// Dense `H⁻¹`.
    pub fn inverse_dense(&self) -> Result<DMatrix<f64>> {
        if self.size > DENSE_LIMIT {
            return Err(Error::TooLarge { size: self.size, limit: DENSE_LIMIT });
        }
        self.solve_columns(&DMatrix::identity(self.size, self.size))
    }
}
