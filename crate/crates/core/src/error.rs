use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("support out of range: {0}")]
    SupportOutOfRange(String),
    #[error("operator is not unitary (deviation {0:.3e})")]
    NonUnitary(f64),
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("empty region: {0}")]
    EmptyRegion(String),
    #[error("dimension guard: {0}")]
    DimensionGuard(String),
    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("reconstruction quality: {0}")]
    ReconstructionQuality(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("internal consistency: {0}")]
    InternalConsistency(String),
}

impl Error {
    /// Process exit code used by the command-line harness.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionGuard(_) => 3,
            Error::InternalConsistency(_) | Error::ReconstructionQuality(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
