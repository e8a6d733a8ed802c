use thiserror::Error;

/// Errors raised anywhere in the lab.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("non-finite value while evaluating at {point:?}")]
    Evaluation { point: Vec<f64> },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("point {point:?} is outside the model domain")]
    DomainExit { point: Vec<f64> },

    #[error("degenerate field: |B| = {magnitude:e} at {point:?}")]
    DegenerateField { point: Vec<f64>, magnitude: f64 },

    #[error("magnetization assumption violated: E.B = {e_dot_b:e}, |B|^2-|E|^2 = {b2_minus_e2:e}")]
    MagnetizationViolation { e_dot_b: f64, b2_minus_e2: f64 },

    #[error("null space of F0 has dimension {dimension}, expected 2")]
    DegenerateKernel { dimension: usize },

    #[error("invalid setup: {0}")]
    InvalidSetup(String),

    #[error("slow-manifold oracle did not converge after {iterations} iterations (residual {residual:e})")]
    OracleDivergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian in slow-manifold oracle")]
    SingularJacobian,

    #[error("right-hand side failed at stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
