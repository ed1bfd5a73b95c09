use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A circuit element or configuration was constructed with bad parameters.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// Probabilities, counts or context sets that violate an input contract.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("calibration failed: residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    CalibrationFailed { residual: f64, tolerance: f64 },

    /// An assembled circuit lost unitarity.
    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
