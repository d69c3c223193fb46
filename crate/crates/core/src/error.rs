use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("rejected potential: {0}")]
    RejectedPotential(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("conditioning failure in block {block}: {detail}")]
    Conditioning { block: i32, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
