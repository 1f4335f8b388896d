use thiserror::Error;

/// Errors raised by the solver and its diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid asymptotic state: {0}")]
    InvalidState(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("quadrature check failed: {0}")]
    Quadrature(String),
    #[error("grid mismatch between field and order-parameter path")]
    GridMismatch,
    #[error("empty path")]
    EmptyPath,
    #[error("fixed-point map is not contractive: predicted factor {factor:.6e} >= 1")]
    NonContractive { factor: f64 },
    #[error("Picard iteration stalled after {sweeps} sweeps (residual {residual:.3e}, tol {tol:.3e})")]
    MaxSweepsExceeded { sweeps: usize, residual: f64, tol: f64 },
    #[error("outer iteration not converging at n = {n}: {reason}")]
    NotConverging { n: usize, reason: String },
    #[error("truncation tail bound {bound:.3e} exceeds budget {budget:.3e}")]
    TailBudgetExceeded { bound: f64, budget: f64 },
    #[error("insufficient data: {usable} usable points, need {needed}")]
    InsufficientData { usable: usize, needed: usize },
    #[error("non-positive values in decay fit input")]
    NonPositiveValues,
    #[error("requested time {0} outside the grid")]
    OutsideGrid(f64),
    #[error("step-size rejected: {0}")]
    StepRejected(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
