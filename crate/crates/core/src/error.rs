use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("degenerate agreement data: every label is identical")]
    DegenerateAgreement,
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    /// True for failures caused by numerics rather than input data or usage.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
