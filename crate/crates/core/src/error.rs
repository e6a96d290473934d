use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit-code contract:
/// IO and image decode failures exit with 2, everything else with 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("xml parse error at line {line}: {message}")]
    XmlParse { line: usize, message: String },

    #[error("annotation schema error: {0}")]
    Schema(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("parse error at line {line}: {message}")]
    LineParse { line: usize, message: String },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("ordering error: {0}")]
    Ordering(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit status for the CLI: 1 for validation-class errors, 2 for IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Image { .. } => 2,
            _ => 1,
        }
    }
}
