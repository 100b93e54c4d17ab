use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("quadrature did not converge: achieved error estimate {achieved:e} (relative {relative:e})")]
    Quadrature { achieved: f64, relative: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("undefined ratio: {0}")]
    ZeroDenominator(&'static str),

    #[error("feature column {0:?} has zero variance")]
    ZeroVariance(String),

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("malformed model: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
