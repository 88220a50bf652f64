use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("reconstruction failed: {0}")]
    ReconstructionFailed(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Stable kebab-case name used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DegenerateKernel(_) => "degenerate-kernel",
            Error::OutOfRange(_) => "out-of-range",
            Error::ReconstructionFailed(_) => "reconstruction-failed",
            Error::Numeric(_) => "numeric",
            Error::Format(_) => "format",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
