use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid class index {class} (class count is {class_count})")]
    InvalidClass { class: u16, class_count: u16 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("class count mismatch: {left} vs {right}")]
    ClassCount { left: u16, right: u16 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("cannot derange a single fake slot (batch size {batch_size}, p_real {p_real})")]
    InfeasibleDerangement { batch_size: usize, p_real: f64 },

    #[error("need {needed} eligible training records, manifest has {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("no prediction for record `{0}`")]
    MissingPrediction(String),

    #[error("record `{id}`: mask unavailable: {detail}")]
    MissingMask { id: String, detail: String },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("{path}: {message}")]
    InvalidRaster { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn arg(message: impl Into<String>) -> Self {
        Error::Argument(message.into())
    }

    /// True for failures caused by the file system rather than by the data or arguments.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Image { .. } | Error::MissingMask { .. }
        )
    }
}
