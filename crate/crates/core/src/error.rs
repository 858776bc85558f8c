use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("truncation n_max={requested} exceeds the hard cap {cap}")]
    TruncationCapExceeded { requested: usize, cap: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("Fano factor is undefined for the vacuum (mean occupation 0)")]
    VacuumFano,

    #[error("all number-state weights vanish")]
    DegenerateWeights,

    #[error("singular factorization: {0}")]
    Singular(String),

    #[error("steady-state residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("steady state is not unique (perturbed solve moved by {deviation:e})")]
    Degenerate { deviation: f64 },

    #[error("truncation inadequate: top-level occupation {occupation:e} at n_max={n_max}")]
    TruncationInadequate { occupation: f64, n_max: usize },

    #[error("invalid density matrix: eigenvalue {0:e} below tolerance")]
    InvalidState(f64),

    #[error("mean occupation {0} below the semiclassical floor")]
    BelowThreshold(f64),

    #[error("argument {0} exceeds the overflow guard")]
    Overflow(f64),

    #[error("structural check failed: {0}")]
    Structure(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, Error>;
