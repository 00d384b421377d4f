use alloc::string::String;

/// Failures reported by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size {m} is not a multiple of the block count {p}")]
    NotDivisible { m: usize, p: usize },

    #[error("matrix is rank deficient: smallest singular value {sigma_min:e} is below tolerance {tolerance:e}")]
    RankDeficient { sigma_min: f64, tolerance: f64 },

    #[error("dense materialization is limited to size {limit}, requested {size}")]
    TooLarge { size: usize, limit: usize },

    #[error("quantizer overloaded, no error certificate can be issued")]
    Overloaded,

    #[error("support enumeration needs {count} subsets, budget is {budget}")]
    BudgetExceeded { count: u128, budget: u128 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
