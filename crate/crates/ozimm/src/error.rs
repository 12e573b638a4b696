use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// The (matrix unit, accumulation length) pair cannot accumulate
    /// exactly: the per-slice bit budget is zero or negative.
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("integer overflow budget exceeded: {0}")]
    OverflowBudget(String),

    #[error("entry at ({row}, {col}) not representable in a {bits}-bit significand")]
    NotRepresentable { bits: u32, row: usize, col: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("bad matrix file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
