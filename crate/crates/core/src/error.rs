use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    BadMeasure(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("values must be finite")]
    NonFinite,
    #[error("level {level} out of range for depth {depth}")]
    LevelOutOfRange { level: usize, depth: usize },
    #[error("ratio {0} outside (0,1)")]
    BadRatio(f64),
    #[error("not adapted: value not constant on cube ({level},{index})")]
    NotAdapted { level: usize, index: usize },
    #[error("functions live on different grids")]
    GridMismatch,
    #[error("multiplier sequence is not predictable at level {0}")]
    NotPredictable(usize),
    #[error("Haar expansion requires uniform measure")]
    NonUniformHaar,
    #[error("coefficient key outside grid: {0}")]
    BadCoefficient(String),
    #[error("malformed sparse family: {0}")]
    MalformedFamily(String),
    #[error("grid too shallow: need depth {needed}, have {have}")]
    DepthOverflow { needed: usize, have: usize },
    #[error("invalid exponent: {0}")]
    BadExponent(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("parse error: {0}")]
    Parse(String),
}
