use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e} exceeds tolerance)")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("bad state spec: {0}")]
    BadSpec(String),

    #[error("basis pair is singular at (x = {x}, y = {y}): |<y|x>| = {overlap:.3e}")]
    BasisPairSingular { x: usize, y: usize, overlap: f64 },

    #[error("expected {expected} parameters, got {got}")]
    BadParamCount { expected: usize, got: usize },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error(
        "optimizer result violates bounds: value {value:.12}, lower {lower:.12}, upper {upper:.12}"
    )]
    OptimizerFailed { value: f64, lower: f64, upper: f64 },

    #[error("decomposition invariant violated: {0}")]
    InvalidDecomposition(String),

    #[error("KD distribution invariant violated: {0}")]
    KdInvariant(String),

    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
