use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HaloError {
    /// Input violates a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Requested precision or truncation cannot be certified.
    #[error("certification failed: {0}")]
    Certification(String),
    /// Malformed configuration data.
    #[error("malformed config: {0}")]
    Config(String),
    /// Brute-force enumeration would exceed its budget.
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, HaloError>;

pub(crate) fn pre<T>(msg: impl Into<String>) -> Result<T> {
    Err(HaloError::Precondition(msg.into()))
}
