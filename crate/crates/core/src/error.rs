use thiserror::Error;

/// Errors from ingestion, model fitting, and estimation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// A malformed input row; `line` is the 1-based line in the source file.
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("{0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("category {0:?} has no records")]
    EmptyCategory(String),

    /// A linear system that should be symmetric positive definite was not.
    #[error("singular system in {context}; a ridge penalty > 0 usually resolves this")]
    Singular { context: String },

    /// The solver ran out of iterations; the last iterate is attached so
    /// callers can inspect how far it got.
    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:.3e}); separable data usually needs a ridge penalty > 0")]
    NonConvergence {
        iterations: usize,
        grad_norm: f64,
        last_coefficients: Vec<f64>,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of the numerical machinery rather than of the input
    /// data; callers use this to pick exit codes.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. } | Error::NonConvergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
