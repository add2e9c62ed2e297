use thiserror::Error;

/// Errors raised by the tracking, sensing and optimization routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IsacError {
    /// The polar state cannot be propagated or constructed (zero range,
    /// zero angle cosine, zero radial speed, or a negative radicand).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    /// Beamforming gain toward the tracked vehicle is too small for the
    /// measurement variances to be finite.
    #[error("beam null: |aᴴf| = {gain:e} below threshold")]
    BeamNull { gain: f64 },

    #[error("innovation matrix is numerically singular")]
    SingularInnovation,

    #[error("prior covariance is not invertible")]
    SingularPrior,

    /// Sensing threshold exceeds what any unit-norm beam can reach.
    #[error("sensing threshold {lambda:e} exceeds attainable maximum {max:e}")]
    InfeasibleSensing { lambda: f64, max: f64 },

    #[error("swap budget of {0} exhausted")]
    SwapBudgetExceeded(usize),

    #[error("line {line}: field `{field}`: {message}")]
    Format {
        line: usize,
        field: String,
        message: String,
    },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for IsacError {
    fn from(e: std::io::Error) -> Self {
        IsacError::Io(e.to_string())
    }
}

pub type Result<T, E = IsacError> = std::result::Result<T, E>;
