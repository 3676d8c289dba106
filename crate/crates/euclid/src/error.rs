use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid line grid: {0}")]
    BadGrid(String),
    #[error("values must be finite")]
    NonFinite,
    #[error("threshold too small: the level set fills 3Q; retry with a larger threshold")]
    ThresholdTooSmall,
    #[error("bump dictionary member failed the smoothness mesh check: {0}")]
    BadBump(String),
    #[error("kernel validation failed: {0}")]
    BadKernel(String),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("core error: {0}")]
    Core(#[from] sparsedom_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
