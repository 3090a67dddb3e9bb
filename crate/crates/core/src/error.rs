use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate simplex: {0}")]
    Degenerate(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("non-conforming mesh: {0}")]
    NonConforming(String),
    #[error("unisolvence failure: {0}")]
    Unisolvence(String),
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
