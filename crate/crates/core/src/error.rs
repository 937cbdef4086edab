use thiserror::Error;

/// Errors raised by the geometric pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {what} (value {value:e})")]
    Domain { what: String, value: f64 },

    #[error("singular matrix (determinant estimate {det:e})")]
    SingularMatrix { det: f64 },

    #[error("degenerate rank-one update: 1 + n_k n^k = {denom:e}")]
    DegenerateUpdate { denom: f64 },

    #[error("degenerate Kropina change: {scalar} = {value:e}")]
    DegenerateChange { scalar: &'static str, value: f64 },

    #[error("beta = b_i y^i = {beta:e} is not above the guard {min:e}")]
    BetaDomain { beta: f64, min: f64 },

    #[error("rho = {rho:e} is numerically zero")]
    RhoZero { rho: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("unsupported dimension {0} (supported: 1..=6)")]
    UnsupportedDimension(usize),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("stage {stage} failed plug-back verification: residual {residual:e} > {tol:e}")]
    StageResidual { stage: &'static str, residual: f64, tol: f64 },

    #[error("trajectory left the admissible domain at step {step}: {reason}")]
    DomainExit { step: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
