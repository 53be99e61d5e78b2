use thiserror::Error;

/// Errors produced anywhere in the crate.
///
/// Variants fall into two families: precondition failures (bad arguments,
/// degenerate geometry, maps that are not what the caller claimed) and I/O
/// failures. [`Error::is_io`] tells them apart, which is what the CLI uses to
/// choose its exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("elements belong to different fields")]
    FieldMismatch,

    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("{0}")]
    TooLarge(String),

    #[error("map is not semilinear: {reason}")]
    NotSemilinear {
        reason: String,
        /// Domain point index at which verification failed, when there is one.
        witness: Option<usize>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => e.is_io_error(),
            Error::Json(e) => e.is_io(),
            _ => false,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
