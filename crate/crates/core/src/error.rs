use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported layout: {0}")]
    UnsupportedLayout(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("spectral density has no high-frequency cutoff")]
    CutoffViolation,

    #[error(
        "quadrature failed on [{lower}, {upper}]: estimate {estimate:e} with error {error:e} \
         after {evaluations} evaluations"
    )]
    QuadratureFailure {
        lower: f64,
        upper: f64,
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::QuadratureFailure { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
