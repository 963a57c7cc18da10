use thiserror::Error;

/// Library error type. The CLI maps `Validation`/`Dimension`/`Usage` to exit
/// code 2 and the numerical variants to exit code 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("near-defective matrix: {0}")]
    NearDefective(String),
    #[error("numerical accuracy refused: {0}")]
    Accuracy(String),
}

impl Error {
    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Dimension(_) | Error::Usage(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
