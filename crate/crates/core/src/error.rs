use thiserror::Error;

/// Errors raised by the solvers, generators and file readers.
#[derive(Debug, Error)]
pub enum DcenError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// The concave linearization `d(x)` is undefined at the origin; callers branch
    /// to the zero-linearization subproblem instead.
    #[error("iterate is zero, concave linearization undefined")]
    ZeroIterate,
    #[error("numerical failure at iteration {iteration}: {detail}")]
    Numerical { iteration: usize, detail: String },
    #[error("recovery condition violated: {0}")]
    ConditionViolated(String),
    #[error("stale factorization: {0}")]
    StaleCache(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DcenError>;

impl From<csv::Error> for DcenError {
    fn from(e: csv::Error) -> Self {
        DcenError::Parse(e.to_string())
    }
}
