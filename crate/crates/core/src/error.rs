use thiserror::Error;

pub type Result<T> = std::result::Result<T, CalError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("antenna index {index} out of range for {count} antennas")]
    IndexOutOfRange { index: usize, count: usize },

    /// The measurement graph does not tie every antenna to the reference,
    /// or a parametrisation leaves the scalar ambiguity unresolved.
    #[error("not identifiable: {0}")]
    Identifiability(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// EM drifted to the all-zero solution.
    #[error("degenerate estimate: {0}")]
    Degenerate(String),

    #[error("phase unwrap failed: {0}")]
    Unwrap(String),
}

impl CalError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CalError::InvalidArgument(msg.into())
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            CalError::InvalidArgument(_) => "invalid_argument",
            CalError::IndexOutOfRange { .. } => "index_out_of_range",
            CalError::Identifiability(_) => "identifiability",
            CalError::Numerical(_) => "numerical",
            CalError::Degenerate(_) => "degenerate",
            CalError::Unwrap(_) => "unwrap",
        }
    }
}
