use thiserror::Error;

#[derive(Debug, Error)]
pub enum QchanError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NonHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("bad parameter: {0}")]
    BadParam(String),
    #[error("operation requires a qubit channel (dim_in = dim_out = 2)")]
    NotQubit,
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("support condition violated: {0}")]
    SupportViolation(String),
    #[error("hypothesis check failed: {0}")]
    AssumptionFailed(String),
    #[error("channel output is near-singular on the probe grid (min eigenvalue {0:.3e})")]
    NotStrictlyPositive(f64),
    #[error("channel preserves purity (isometric or replacer); witness construction does not apply")]
    PurityPreserving,
    #[error("Bloch vector outside unit ball (|w| = {0})")]
    BadBloch(f64),
    #[error("bad ensemble: {0}")]
    BadEnsemble(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QchanError>;
