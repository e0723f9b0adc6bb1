use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("pole of the gamma function at {0}")]
    Pole(Complex64),

    #[error("series did not converge after {terms} terms (last tail bound {tail:.3e})")]
    NonConvergence { terms: usize, tail: f64 },

    #[error("catastrophic cancellation: rounding error {rounding:.3e} swamps series value {value:.3e}")]
    PrecisionLoss { rounding: f64, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("root {0} is zero or closer to zero than the cluster radius")]
    ZeroRoot(Complex64),

    #[error("root finder failed to converge after {iterations} iterations (residual {residual:.3e})")]
    RootNonConvergence { iterations: usize, residual: f64 },

    #[error("root spectrum inconsistent with coefficients (relative mismatch {mismatch:.3e})")]
    InconsistentSpectrum { mismatch: f64 },

    #[error("operation requires simple roots, but root {root} has multiplicity {mult}")]
    Multiplicity { root: Complex64, mult: usize },

    #[error("quadrature failed: achieved error estimate {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("inverse Laplace transform unstable: node doubling changed result by {change:.3e}")]
    LaplaceNonConvergence { change: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient grid: {0}")]
    InsufficientGrid(String),

    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
