use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric: |m[{row}][{col}] - m[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("inner product x_{i}.x_{j} = {value} lies outside [0, 1]")]
    InnerProductDomain { i: usize, j: usize, value: f64 },

    #[error("localization graph is disconnected among the requested nodes (component labels {labels:?})")]
    Disconnected { labels: Vec<usize> },

    #[error("regressors have numerically zero variance")]
    DegenerateRegressors,

    #[error("residual sum of squares is numerically zero; F statistic undefined")]
    PerfectFit,

    #[error("adjusted denominator sum(t^2) - sum(gamma) = {0:e} is not positive")]
    NonPositiveDenominator(f64),

    #[error("empirical second-moment matrix is singular (condition number {0:e})")]
    SingularMoment(f64),

    #[error("empty input")]
    Empty,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
