//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Parameter combination for which the thresholding map is not an
    /// increasing bijection; the message names the violated inequality.
    #[error("ill-posed threshold: {0}")]
    IllPosedThreshold(String),

    /// A filter update produced a non-finite value.
    #[error("non-finite value at step {step}: {detail}")]
    NonFinite { step: usize, detail: String },

    /// A trial aborted; wraps the filter failure with experiment context.
    #[error("algorithm `{algorithm}` failed in trial {trial}: {source}")]
    Trial {
        algorithm: String,
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for runtime numeric failures (as opposed to user/config errors).
    /// The CLI maps these to exit code 3, everything else to exit code 2.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NonFinite { .. } => true,
            Error::Trial { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
