use thiserror::Error;

/// Errors raised by the library. Emptiness of an inverse image is not an
/// error; it is reported as a value (see [`crate::regularizers::InverseImage`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("point outside the domain: {0}")]
    Domain(String),
    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),
    #[error("point is not optimal: residual norm {residual:e} exceeds tolerance {tol:e}")]
    NotOptimal { residual: f64, tol: f64 },
    #[error("alternating projections did not converge after {sweeps} sweeps (last gap {gap:e})")]
    Convergence { sweeps: usize, gap: f64 },
    #[error("line search failed: step size {step:e} collapsed")]
    LineSearch { step: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("every probe sample was rejected")]
    EmptyProbe,
}

pub type Result<T> = std::result::Result<T, Error>;
