use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported process for this operation: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound}")]
    Accuracy { estimate: f64, error_bound: f64 },

    #[error("degenerate long-run variance {0}")]
    DegenerateVariance(f64),

    #[error("series diverges: {0}")]
    Divergence(String),

    #[error("precision loss: {0}")]
    Precision(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 for invalid input, 3 for resource or accuracy
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Accuracy { .. } | Error::Precision(_) | Error::Resource(_) | Error::Io(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
