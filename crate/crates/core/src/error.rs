use thiserror::Error;

/// Errors raised by the numerical modules.
///
/// Variant names double as the machine-readable error names that the
/// experiment runner reports, see [`Error::name`].
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid anisotropy index: {0}")]
    InvalidIndex(String),
    #[error("Sobolev exponent undefined: beta = {beta} <= 1")]
    SobolevExponentUndefined { beta: f64 },
    #[error("invalid radius: {0}")]
    InvalidRadius(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("kernel density queried at a zero offset")]
    SingularPoint,
    #[error("Levy integral exceeded the cap: {value} > {cap}")]
    IntegrabilityFailure { value: f64, cap: f64 },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("node {0:?} lies on the boundary layer; second differences unavailable")]
    BoundaryStencilError(Vec<usize>),
    #[error("spectral path requires a periodic grid")]
    SpectralPathUnavailable,
    #[error("convergence order fit unreliable; raw errors {errors:?}")]
    OrderFitUnreliable { errors: Vec<f64> },
    #[error("quadrature resolution: {0}")]
    QuadratureResolutionError(String),
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("cutoff window: {0}")]
    WindowError(String),
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolveFailure { iterations: usize, residual: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("exponent fit unreliable: {0}")]
    ExponentFitUnreliable(String),
    #[error("fit unreliable: {0}")]
    FitUnreliable(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// Stable identifier used in reports and CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidIndex(_) => "InvalidIndex",
            Error::SobolevExponentUndefined { .. } => "SobolevExponentUndefined",
            Error::InvalidRadius(_) => "InvalidRadius",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::SingularPoint => "SingularPoint",
            Error::IntegrabilityFailure { .. } => "IntegrabilityFailure",
            Error::InvalidQuery(_) => "InvalidQuery",
            Error::BoundaryStencilError(_) => "BoundaryStencilError",
            Error::SpectralPathUnavailable => "SpectralPathUnavailable",
            Error::OrderFitUnreliable { .. } => "OrderFitUnreliable",
            Error::QuadratureResolutionError(_) => "QuadratureResolutionError",
            Error::SupportViolation(_) => "SupportViolation",
            Error::WindowError(_) => "WindowError",
            Error::SolveFailure { .. } => "SolveFailure",
            Error::PreconditionViolation(_) => "PreconditionViolation",
            Error::ExponentFitUnreliable(_) => "ExponentFitUnreliable",
            Error::FitUnreliable(_) => "FitUnreliable",
            Error::Unsupported(_) => "Unsupported",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
