use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("contour error: {0}")]
    Contour(String),
    #[error("contour passes through a singularity of the symbol: {0}")]
    ContourThroughSingularity(String),
    #[error("symbol vanishes on the contour: {0}")]
    NonVanishing(String),
    #[error("scalar symbol has nonzero winding number {0}")]
    NonCanonicalScalar(i64),
    #[error("no canonical factorisation: {0}")]
    NoCanonical(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("signature error: {0}")]
    Signature(String),
    #[error("inconsistent data: {0}")]
    Inconsistency(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unknown name '{name}'; known: {known}")]
    Unknown { name: String, known: String },
}

pub type Result<T> = std::result::Result<T, Error>;
