use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is empty")]
    Empty,

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("solver residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("spectral radius {radius} is not below 1; the recursion has no stationary solution")]
    SpectralRadiusTooLarge { radius: f64 },

    #[error("invalid eigenvalue range [{low}, {high}]")]
    InvalidRange { low: f64, high: f64 },

    #[error("too few samples: need at least {required}, found {found}")]
    TooFewSamples { required: usize, found: usize },

    #[error("dynamics are unstable: spectral radius of I - lr*A is {spectral_radius} (must be < 1)")]
    UnstableDynamics { spectral_radius: f64 },

    #[error("invalid sample specification: {0}")]
    InvalidSpec(String),

    #[error("design matrix is singular (smallest Hessian eigenvalue {min_eigenvalue:e})")]
    SingularDesign { min_eigenvalue: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal error: KL divergence evaluated to {0:e}")]
    NegativeKl(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
