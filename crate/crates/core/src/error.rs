use thiserror::Error;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum OmtError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("feature vector must have at least one entry")]
    EmptyVector,

    #[error("feature vector entry {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot normalize: every vector has zero norm")]
    ZeroNorm,

    #[error("cover has no representatives")]
    EmptyCover,

    #[error("{0}")]
    UndefinedRate(&'static str),

    #[error("prediction and label sequences differ in length ({predictions} vs {labels})")]
    LengthMismatch { predictions: usize, labels: usize },

    #[error("linear system is singular or not positive definite (pivot {index} = {pivot:e})")]
    Singular { index: usize, pivot: f64 },

    #[error("solver produced a non-finite value at index {index}")]
    NonFiniteSolution { index: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("stream has no anchor record (t = -1)")]
    MissingAnchor,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl OmtError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            OmtError::DimensionMismatch { .. }
            | OmtError::InvalidConfig(_)
            | OmtError::LengthMismatch { .. } => ErrorKind::Usage,
            OmtError::EmptyVector
            | OmtError::NonFinite { .. }
            | OmtError::ZeroNorm
            | OmtError::EmptyCover
            | OmtError::UndefinedRate(_)
            | OmtError::Parse { .. }
            | OmtError::MissingAnchor => ErrorKind::Data,
            OmtError::Singular { .. } | OmtError::NonFiniteSolution { .. } => {
                ErrorKind::Numerical
            }
            OmtError::Io(_) => ErrorKind::Io,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        OmtError::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, OmtError>;
