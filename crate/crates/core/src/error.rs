use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("catalog: {0}")]
    Catalog(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error at {location}: {message}")]
    Format { location: String, message: String },

    /// The enumeration node budget was exhausted before the computation finished.
    #[error("enumeration budget of {limit} nodes exceeded")]
    Budget { limit: u64 },

    #[error("integer overflow in coefficient arithmetic")]
    Overflow,

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn format(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            location: location.into(),
            message: message.into(),
        }
    }
}
