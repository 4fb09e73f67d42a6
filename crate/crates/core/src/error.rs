//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value (widths, tolerances, counts, ids).
    #[error("configuration error: {0}")]
    Config(String),

    /// Input length does not match the expected dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// An operation that requires a nonempty set was given an empty one.
    #[error("empty set: {0}")]
    EmptySet(&'static str),

    /// Sampling could not produce points (rejection cap hit, zero support).
    #[error("sampling error: {0}")]
    Sampling(String),

    /// Dense linear algebra failure (non-SPD matrix, singular solve).
    #[error("linear algebra error: {0}")]
    Linalg(String),

    /// Importance-sampling support violation: proposal density is zero at a
    /// point where the prior-weighted indicator is positive.
    #[error("support violation: proposal density is zero at a failing point {0:?}")]
    SupportViolation(Vec<f64>),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
