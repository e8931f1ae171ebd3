use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the solvers and the batch front end.
#[derive(Debug, Error)]
pub enum PtError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("states live on different grids")]
    GridMismatch,

    #[error("kappa = {kappa} is not a root of the secular equation (|residual| = {residual:.3e})")]
    NotARoot { kappa: Complex64, residual: f64 },

    #[error("root search did not converge after {iterations} iterations (last iterate {last})")]
    RootNotConverged { last: Complex64, iterations: usize },

    #[error("integration blew up near x = {x:.6}")]
    Integration { x: f64 },

    #[error("step size underflow at x = {x:.6}")]
    StepUnderflow { x: f64 },

    #[error("Newton iteration failed: {reason} (iterations {iterations}, residual {residual:.3e})")]
    Newton {
        reason: String,
        iterations: usize,
        residual: f64,
    },

    #[error("singular Jacobian (condition estimate {condition:.3e})")]
    SingularJacobian { condition: f64 },

    #[error("Re(kappa) > 0 constraint violated (kappa = {0})")]
    KappaConstraint(Complex64),

    #[error("bisection bracket failure: {0}")]
    Bracket(String),

    #[error("{0}")]
    Diagnostic(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PtError>;
