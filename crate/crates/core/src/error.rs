use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("covariance matrix is not positive semidefinite even after jitter {jitter:e}")]
    CovarianceNotPsd { jitter: f64 },

    #[error("no vectors survive extraction")]
    EmptySample,

    #[error("no observed pairs at lag {lag}")]
    EmptyLag { lag: usize },

    #[error("sample too small: need at least {min}, got {n}")]
    SampleTooSmall { n: usize, min: usize },

    #[error("exhaustive search too large: {0} subsets")]
    TooLarge(u128),

    #[error("all candidate subsets are singular")]
    AllSubsetsSingular,

    #[error("reweighting rejected every observation")]
    AllWeightsZero,

    #[error("no partition has more than {min} vectors")]
    NoValidPartition { min: usize },

    #[error("estimator not usable: {0}")]
    NotUsable(String),

    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),

    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("cell count mismatch: header says {expected}, found {got}")]
    CellCountMismatch { expected: usize, got: usize },

    #[error("data has zero spread")]
    ZeroSpread,

    #[error("study aborted: {failed} of {total} replications failed for {what}")]
    StudyAborted {
        what: String,
        failed: usize,
        total: usize,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::DimensionMismatch { .. }
                | Error::UnknownEstimator(_)
                | Error::Parse { .. }
                | Error::MalformedHeader(_)
                | Error::CellCountMismatch { .. }
                | Error::Invalid(_)
                | Error::Io(_)
        )
    }
}
