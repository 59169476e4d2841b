use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("unsupported cone representation for {0}")]
    UnsupportedRepresentation(&'static str),

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// An iterative scheme ran out of budget. Carries the last iterate and its
    /// residual so callers can decide whether the answer is still usable.
    #[error("{what} did not converge (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        last_iterate: Vec<f64>,
        residual: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("diagnostic: {0}")]
    Diagnostic(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Validation { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension { context, expected, got }
    }

    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::dim(context, expected, got))
    }
}
