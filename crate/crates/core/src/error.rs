use thiserror::Error;

/// Failures surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Inconsistent or incomplete configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input records that could not be ingested.
    #[error("ingestion error: {0}")]
    Ingestion(String),

    /// Work that would exceed the enumeration budget.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// A precondition of the called operation does not hold.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The requested combination has no closed-form expression.
    #[error("no closed form: {0}")]
    NoClosedForm(String),

    /// Target risk at or beyond what the bound can ever reach.
    #[error("unreachable risk level {target} (supremum {supremum})")]
    Unreachable { target: f64, supremum: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
