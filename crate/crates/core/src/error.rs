use thiserror::Error;

use crate::threshold::ThresholdPrediction;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid scaling family: {0}")]
    InvalidScaling(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Potential is not in W^1_2: a jump at a breakpoint or a nonzero value at a support endpoint.
    #[error("potential is not in W^1_2: jump of {jump:e} at x = {at}")]
    NotW12 { at: f64, jump: f64 },

    #[error("potential is discontinuous at the origin (jump {jump:e})")]
    DiscontinuousAtZero { jump: f64 },

    #[error("lambda = {lambda} lies outside the scaling table [{lo}, {hi}]")]
    OutOfTable { lambda: f64, lo: f64, hi: f64 },

    #[error("step size underflow at x = {x}")]
    StepFailure { x: f64 },

    #[error("adaptive quadrature did not converge on [{a}, {b}] (error estimate {err:e})")]
    QuadratureFailure { a: f64, b: f64, err: f64 },

    #[error("no zero-energy resonance: mismatch |h'(b)| = {mismatch:e}")]
    NoResonance { mismatch: f64 },

    #[error("no sign change of h'(b) on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("no negative eigenvalue found")]
    NotFound,

    #[error("point interaction has no eigenvalue (kappa * beta = {product} >= 0)")]
    NoEigenvalue { product: f64 },

    #[error("conditions violated: {}", failed.join(", "))]
    ConditionsViolated {
        failed: Vec<String>,
        prediction: Option<Box<ThresholdPrediction>>,
    },

    #[error("need at least 3 successful rows, got {0}")]
    InsufficientData(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for numerical-engine failures (as opposed to bad input or unmet hypotheses).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::StepFailure { .. } | Error::QuadratureFailure { .. }
        )
    }

    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::InvalidPotential(_)
                | Error::InvalidScaling(_)
                | Error::InvalidInput(_)
                | Error::OutOfTable { .. }
        )
    }
}
