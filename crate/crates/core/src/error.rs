use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A symbol produced a non-finite value at a quadrature node.
    #[error("symbol evaluation is not finite at theta = {theta}")]
    Evaluation { theta: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid mollifier: {0}")]
    InvalidMollifier(String),

    /// The requested radius is below the computed validity threshold.
    #[error("precondition failed: R = {r} must exceed R1 = {r1}")]
    BelowThreshold { r: f64, r1: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),

    #[error("plot error: {0}")]
    Plot(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
