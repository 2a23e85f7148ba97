use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("ring of {n} sites exceeds the budget of {cap} sites")]
    BudgetExceeded { n: usize, cap: usize },

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("generating-function denominator degenerates to a linear polynomial on p1 + p2 = 1")]
    DegenerateDenominator,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid simulation plan: {0}")]
    InvalidPlan(String),
}

pub type Result<T> = std::result::Result<T, Error>;
