use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, KseError>;

#[derive(Debug, Error)]
pub enum KseError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    /// Non-finite coefficients or an L-infinity norm above the blow-up threshold.
    #[error("blow-up at t = {t}: norm {norm}")]
    BlowUp { t: f64, norm: f64 },

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("fixture mismatch: {0}")]
    FixtureMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl KseError {
    pub fn config(msg: impl Into<String>) -> Self {
        KseError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        KseError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            KseError::BlowUp { .. } => 3,
            KseError::FixtureMismatch(_) => 4,
            _ => 2,
        }
    }
}
