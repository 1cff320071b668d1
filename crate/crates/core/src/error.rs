use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("exponent must exceed 1, got {0}")]
    InvalidExponent(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("source term has nonzero mean {mean:e} (tolerance {tol:e}); periodic problem is not solvable")]
    NonZeroMeanSource { mean: f64, tol: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("CFL number {cfl} exceeds the limit {limit} for the upwind scheme")]
    CflViolation { cfl: f64, limit: f64 },

    #[error("circulation requires a closed curve with at least 8 points")]
    CurveNotClosed,

    #[error("time step {requested:e} exceeds the stability cap {cap:e}")]
    DtTooLarge { requested: f64, cap: f64 },

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("velocity is degenerate on the whole evaluation mask")]
    DegenerateVelocity,

    #[error("series too short: need at least {needed} entries, got {got}")]
    InsufficientSeries { needed: usize, got: usize },
}
