use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Invalid deployment or scenario description.
    #[error("configuration error: {0}")]
    Config(String),
    /// Radio or slot parameters outside the supported range.
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    /// A closed form was requested for a network it does not apply to.
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested computation exceeds the configured size limit.
    #[error("complexity limit exceeded: {0}")]
    Complexity(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}
