use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the canopy fitting library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value lies outside its valid domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter lies outside its box bounds.
    #[error("parameter `{field}` = {value} is outside [{lower}, {upper}]")]
    OutOfBounds {
        field: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },

    /// Invalid configuration (profiles, kernels, presets).
    #[error("configuration error: {0}")]
    Config(String),

    /// Numerical failure (e.g. a kernel matrix that stays indefinite).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Malformed file contents.
    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: usize, message: String },

    /// Malformed file contents where no byte offset applies.
    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn format(offset: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
