use thiserror::Error;

/// Errors raised by the engine. Variants map to the failure classes of the
/// public operations; messages carry enough context to reproduce the call.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("vertex out of range: {0}")]
    OutOfRange(String),
    #[error("not a circuit: {0}")]
    NotACircuit(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("odd-degree vertices {0:?}")]
    OddDegree(Vec<String>),
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("identity violated: {0}")]
    IdentityViolation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("observable extraction failed: {0}")]
    Observable(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(format!($($arg)*)))
    };
}
pub(crate) use bail;
