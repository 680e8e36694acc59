use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Hurst index {0}: must lie strictly between 1/2 and 1")]
    InvalidHurst(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("calibration failed: {0}")]
    CalibrationFailure(String),

    #[error("resolution mismatch: constants calibrated at {calibrated} points per unit, lattice has {lattice}")]
    ResolutionMismatch { calibrated: f64, lattice: f64 },

    #[error("size limit exceeded: {size} > {limit}")]
    SizeLimit { size: usize, limit: usize },

    #[error("unsupported basis element: {0}")]
    UnsupportedBasis(String),

    #[error("degenerate path: gamma_n^-1 = {0:e}")]
    DegeneratePath(f64),

    #[error("singular matrix")]
    Singular,

    #[error("near-zero denominator {value:e} (threshold {threshold:e})")]
    NearZeroDenominator { value: f64, threshold: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short stable identifier, safe to embed in CSV fields.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidHurst(_) => "invalid_hurst",
            Error::Domain(_) => "domain",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::CalibrationFailure(_) => "calibration_failure",
            Error::ResolutionMismatch { .. } => "resolution_mismatch",
            Error::SizeLimit { .. } => "size_limit",
            Error::UnsupportedBasis(_) => "unsupported_basis",
            Error::DegeneratePath(_) => "degenerate_path",
            Error::Singular => "singular",
            Error::NearZeroDenominator { .. } => "near_zero_denominator",
            Error::InvalidConfig(_) => "invalid_config",
        }
    }
}
