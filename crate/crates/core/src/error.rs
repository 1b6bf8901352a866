use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Mathematical precondition violated (zero distance, negative speed, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameters that are individually valid but cannot be used together.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was invoked in a state that does not allow it.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The simulation produced a non-finite quantity.
    #[error("numerical failure at tick {tick} (aircraft {id}): {what}")]
    Numerical { tick: u64, id: u32, what: String },

    /// Scenario file or override could not be understood.
    #[error("scenario error at {location}: {message}")]
    Scenario { location: String, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
