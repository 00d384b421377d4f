use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Uniform midrise/midtread alphabet with `levels` points spaced `2 * delta`,
/// symmetric about zero: `{(2i - (L - 1)) * delta : i = 0..L}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alphabet {
    levels: usize,
    delta: f64,
}

impl Alphabet {
    pub fn new(levels: usize, delta: f64) -> Result<Self> {
        if levels < 2 {
            return Err(invalid(format!("alphabet needs at least 2 levels, got {levels}")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(invalid(format!("alphabet half-spacing must be positive, got {delta}")));
        }
        Ok(Self { levels, delta })
    }

    /// Smallest alphabet with half-spacing `delta` for which the greedy rule
    /// is guaranteed stable: `feedback_norm + amplitude / delta <= L`.
    pub fn for_stability(feedback_norm: f64, amplitude: f64, delta: f64) -> Result<Self> {
        if !(amplitude >= 0.0 && feedback_norm >= 0.0) {
            return Err(invalid("amplitude and feedback norm must be non-negative"));
        }
        // guard against ceil(4.000000000001) style rounding
        let raw = feedback_norm + amplitude / delta;
        let levels = libm::ceil(raw - 1e-12).max(2.0) as usize;
        Self::new(levels, delta)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn max_level(&self) -> f64 {
        (self.levels - 1) as f64 * self.delta
    }

    /// Value of the `i`-th level in increasing order.
    pub fn level(&self, i: usize) -> f64 {
        (2.0 * i as f64 - (self.levels - 1) as f64) * self.delta
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.levels).map(|i| self.level(i)).collect()
    }

    /// Index of the level nearest to `w`. Midpoints go to the larger level,
    /// values beyond the range clamp to the extreme levels.
    pub fn index_of(&self, w: f64) -> usize {
        let pos = 0.5 * (w / self.delta + (self.levels - 1) as f64) + 0.5;
        let idx = libm::floor(pos);
        if idx.is_nan() || idx <= 0.0 {
            0
        } else if idx >= (self.levels - 1) as f64 {
            self.levels - 1
        } else {
            idx as usize
        }
    }

    pub fn round(&self, w: f64) -> f64 {
        self.level(self.index_of(w))
    }

    pub fn contains(&self, v: f64) -> bool {
        let i = self.index_of(v);
        (self.level(i) - v).abs() <= 1e-12 * self.delta.max(1.0)
    }

    /// Whether the greedy rule with the given `‖I − H‖∞→∞` is guaranteed not
    /// to overload on inputs bounded by `amplitude`.
    pub fn is_stable_for(&self, feedback_norm: f64, amplitude: f64) -> bool {
        feedback_norm + amplitude / self.delta <= self.levels as f64 * (1.0 + 1e-12)
    }
}
