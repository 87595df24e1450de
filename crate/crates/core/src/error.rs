use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("aliasing: boundary energy fraction {fraction:.3e} exceeds tolerance {tol:.1e}")]
    Aliasing { fraction: f64, tol: f64 },
    #[error("ill-conditioned: {0}")]
    Conditioning(String),
    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("classification: {0}")]
    Classification(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
