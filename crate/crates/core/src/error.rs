use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Hypothesis failures of a criterion are usually reported as data (see
/// [`crate::Applicability`]); the `NotApplicable` variant is only used by
/// operations whose whole result is meaningless without the hypothesis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("decomposition did not converge for a {rows}x{cols} matrix")]
    NumericFailure { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid correspondence: {0}")]
    InvalidCorrespondence(String),

    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),

    #[error(
        "operator is not an intertwiner (residual {residual:.3e}); amplification is undefined"
    )]
    Intertwiner { residual: f64 },

    #[error("tensor space of dimension {dim} exceeds the cap {cap}")]
    Resource { dim: usize, cap: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("truncation window is empty for power {power}; need at least M = {min_trunc}")]
    Window { power: usize, min_trunc: usize },

    #[error("usage: {0}")]
    Usage(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
