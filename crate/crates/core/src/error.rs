use thiserror::Error;

pub type Result<T, E = HodgeError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HodgeError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("backend contract violated: {0}")]
    Contract(String),

    #[error("form is not harmonic: residual {residual:.3e} exceeds {tol:.1e}")]
    NotHarmonic { residual: f64, tol: f64 },

    #[error("Neumann iteration did not converge after {steps} steps (last update {update:.3e})")]
    NoConvergence { steps: usize, update: f64 },

    #[error("bound violated: {0}")]
    BoundViolated(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("search space too large: {0}")]
    SearchTooLarge(String),
}

impl HodgeError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        HodgeError::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        HodgeError::InvalidInput(msg.into())
    }
}
