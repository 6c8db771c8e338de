use thiserror::Error;

/// Errors produced by the optimizer library.
#[derive(Debug, Error)]
pub enum SscnError {
    #[error("line {line}: malformed token {token:?}")]
    Parse { line: usize, token: String },

    #[error("line {line}: feature indices must be strictly increasing and 1-based ({detail})")]
    Format { line: usize, detail: String },

    #[error("line {line}: unsupported label {label:?} (expected one of 0, 1, -1, +1)")]
    Label { line: usize, label: String },

    #[error("dataset has no samples")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid coordinate subset: {0}")]
    InvalidSubset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lazy curvature requested without an anchor cache")]
    LazyCacheMissing,

    #[error("non-finite entries in curvature block")]
    NonFiniteCurvature,

    #[error("hard case detected: the dual formulation has no interior maximizer")]
    HardCase,

    #[error("model dimension {0} exceeds the brute-force limit of 3")]
    OracleDimension(usize),

    #[error("objective dimension {n} exceeds diagnostic limit {limit}")]
    DiagnosticTooLarge { n: usize, limit: usize },

    #[error("non-finite objective value at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SscnError>;
