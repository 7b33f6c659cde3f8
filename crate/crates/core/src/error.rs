use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("C({n},{k}) exceeds the enumeration cap of {cap} subsets; use a subsampled family")]
    CombinatorialOverflow { n: usize, k: usize, cap: u128 },

    #[error("index {index} belongs to no subset of the family")]
    EmptyIncidence { index: usize },

    #[error("kernel declared degenerate but zeta_1 = {zeta1}")]
    DegeneracyMismatch { zeta1: f64 },

    #[error("noise scale must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("privacy budget exhausted: requested {requested}, remaining {remaining}")]
    BudgetExhausted { requested: f64, remaining: f64 },

    #[error("insufficient data: need at least {needed} points, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
