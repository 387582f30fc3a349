use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("corrupt sparse matrix: {0}")]
    CorruptMatrix(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("{file}:{line}: {msg}")]
    Format { file: PathBuf, line: usize, msg: String },

    #[error("undefined value: {0}")]
    Undefined(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("invalid config field `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension { op, detail: detail.into() }
    }

    pub(crate) fn format(file: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Format { file: file.into(), line, msg: msg.into() }
    }

    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { field: field.into(), msg: msg.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Stable machine-readable code, used by the CLI on failure.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "E_DIMENSION",
            Error::CorruptMatrix(_) => "E_CORRUPT_MATRIX",
            Error::Contract(_) => "E_CONTRACT",
            Error::NonFinite(_) => "E_NON_FINITE",
            Error::Format { .. } => "E_FORMAT",
            Error::Undefined(_) => "E_UNDEFINED",
            Error::Capacity(_) => "E_CAPACITY",
            Error::DegenerateSplit(_) => "E_DEGENERATE_SPLIT",
            Error::Config { .. } => "E_CONFIG",
            Error::Io { .. } => "E_IO",
            Error::Json(_) => "E_JSON",
        }
    }
}
