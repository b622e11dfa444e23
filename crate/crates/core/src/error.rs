use thiserror::Error;

/// Errors shared by every model family.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An exact enumeration would exceed the configured size guard.
    #[error("size guard exceeded: {what} needs {bits} assignment bits, limit is {limit}")]
    Size {
        what: &'static str,
        bits: u32,
        limit: u32,
    },

    #[error("insufficient samples: {what} needs at least {required}, got {got}")]
    InsufficientSamples {
        what: &'static str,
        required: usize,
        got: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("malformed model: {0}")]
    Model(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

pub(crate) fn check_unit_open(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        param(format!("{name} must lie in (0, 1), got {value}"))
    }
}
