use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degree sequence is not graphical: {degrees:?}")]
    NotGraphical { degrees: Vec<u32> },

    #[error("degree sum {total} is odd")]
    OddDegreeSum { total: u64 },

    #[error("no graphical sequence after {attempts} sampling attempts")]
    SamplingBudgetExceeded { attempts: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("enumeration refused: n = {n} exceeds the cap of {cap} vertices")]
    OverCap { n: usize, cap: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
