use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimensions(String),

    #[error("truncated stream: partial frame starting at byte offset {offset}")]
    TruncatedStream { offset: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bitstream error at bit {bit} (byte {byte}): {msg}", byte = .bit / 8)]
    Bitstream { bit: usize, msg: String },

    #[error("weights error at byte {offset}: {msg}")]
    Weights { offset: usize, msg: String },

    #[error("qpmap error at line {line}: {msg}")]
    QpMap { line: usize, msg: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::Dimensions(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
