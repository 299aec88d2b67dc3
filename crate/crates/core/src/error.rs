use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GelfandError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integrator failed at s = {s}: {reason}")]
    Integration { s: f64, reason: String },

    #[error("trajectory blew up after s = {last_s}")]
    BlowUp { last_s: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("no explicit homogeneous solution for degree {0}")]
    NoExplicitSolution(usize),

    #[error("solvability obstruction: orthogonality defect {defect:e}")]
    Obstruction { defect: f64 },

    #[error("fixed-point map is not contracting: ratio {ratio} at iteration {iteration}")]
    NonContraction { iteration: usize, ratio: f64 },

    #[error("Newton iteration diverged: residual {residual:e} after {iterations} iterations")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("overflow guard: |phi| = {0} exceeds limit")]
    Overflow(f64),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, GelfandError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(GelfandError::InvalidParameter(msg.into()))
}

impl From<std::io::Error> for GelfandError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<serde_json::Error> for GelfandError {
    fn from(e: serde_json::Error) -> Self {
        Self::Io(e.to_string())
    }
}
