use std::path::PathBuf;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Shapes, indices, or sizes that violate an operation's contract.
    #[error("structural error: {0}")]
    Structural(String),

    /// NaN/Inf encountered, or training diverged.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// An operation was invoked in the wrong order (e.g. backward before forward).
    #[error("state error: {0}")]
    State(String),

    /// A file was readable but its contents are not what we expect.
    #[error("format error: {0}")]
    Format(String),

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
