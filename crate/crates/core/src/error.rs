use thiserror::Error;

/// Errors raised by set construction, solver queries and reachability.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("set is empty")]
    EmptySet,

    #[error("branch-and-bound node budget of {budget} exhausted")]
    BudgetExhausted { budget: usize },

    #[error("numerical breakdown in simplex: {0}")]
    NumericalBreakdown(String),

    #[error("rank decision is ambiguous: singular value {value:e} within tolerance of threshold {threshold:e}")]
    AmbiguousRank { value: f64, threshold: f64 },

    #[error("binary factor ordering violated: {0}")]
    Ordering(String),

    #[error("model validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
