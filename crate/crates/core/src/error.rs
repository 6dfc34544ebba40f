use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel specification: {0}")]
    InvalidSpec(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("variable sets must be disjoint: {0}")]
    OverlappingVariables(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource cap exceeded: {what} needs {estimate:.3e}, cap is {cap:.3e}")]
    CapExceeded {
        what: String,
        estimate: f64,
        cap: f64,
    },

    #[error("malformed input: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
