use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An iterative routine did not converge or hit a degenerate configuration.
    #[error("numerical error after {iterations} iterations: {message}")]
    Numerical { message: String, iterations: usize },

    /// An iterative eigensolver ran out of budget; the best estimate is attached.
    #[error("{what} did not converge after {iterations} iterations (estimate {estimate:e}, residual {residual:e})")]
    Unconverged {
        what: String,
        estimate: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("{}: {source}", path.display())]
    File {
        path: std::path::PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Reads a UTF-8 file, attaching the path to any I/O error.
pub fn read_file(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    pub(crate) fn numerical(msg: impl Into<String>, iterations: usize) -> Self {
        Error::Numerical {
            message: msg.into(),
            iterations,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
