use std::path::PathBuf;

/// Error type shared by every module in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rank-deficient input: {0}")]
    RankDeficient(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("svd did not converge: {0}")]
    SvdFailure(String),

    #[error("insufficient observations: {0}")]
    Shortfall(String),

    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: malformed header: {message}")]
    MalformedHeader { path: PathBuf, message: String },

    #[error("{path}: truncated payload: {message}")]
    Truncated { path: PathBuf, message: String },

    #[error("{path}: value out of range: {message}")]
    OutOfRange { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by unreadable or unparsable external data,
    /// as opposed to invalid parameters or numerical failures.
    pub fn is_io_like(&self) -> bool {
        matches!(
            self,
            Error::Io(_)
                | Error::Parse { .. }
                | Error::MalformedHeader { .. }
                | Error::Truncated { .. }
                | Error::OutOfRange { .. }
        )
    }
}
