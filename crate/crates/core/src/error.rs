use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// An argument violated a documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A numerical routine failed to reach its accuracy target.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Input data could not be used (non-finite, non-positive, empty...).
    #[error("data error: {0}")]
    Data(String),

    /// The counting process was queried at a level the generated series never reaches.
    #[error("horizon exceeded: level {level} is not below the final partial sum {total}")]
    Horizon { level: f64, total: f64 },
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Parameter(msg.into()))
}
