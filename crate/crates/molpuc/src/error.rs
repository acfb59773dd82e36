use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("insufficient moments: need c_{0}")]
    InsufficientMoments(i64),
    #[error("not quasi-definite at level {level} (sigma_min = {sigma_min:.3e})")]
    NotQuasiDefinite { level: usize, sigma_min: f64 },
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
