use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("aggregation produced no complete block")]
    EmptyResult,
    #[error("Durbin-Levinson innovation variance underflowed at lag {lag}")]
    DegenerateRecursion { lag: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("loess span covers {points} points, need at least {needed}")]
    SpanTooSmall { points: usize, needed: usize },
    #[error("local loess design matrix is rank-deficient")]
    SingularFit,
    #[error("frequency {0} is below the minimum of 2")]
    FrequencyTooSmall(usize),
    #[error("regression design matrix is rank-deficient")]
    SingularDesign,
    #[error("feature {stage} failed: {source}")]
    Feature {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("feature matrix is empty")]
    EmptyMatrix,
    #[error("zero-variance feature columns: {}", .0.join(", "))]
    DegenerateColumn(Vec<String>),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("expected {expected} columns, got {got}")]
    ColumnMismatch { expected: usize, got: usize },
    #[error("proximity entry ({row}, {col}) = {value} is outside [0, 1]")]
    InvalidProximity { row: usize, col: usize, value: f64 },
    #[error("cannot form {k} clusters from {n} objects")]
    KTooLarge { k: usize, n: usize },
    #[error("silhouette needs at least two clusters")]
    SingleCluster,
    #[error("dissimilarity matrix is not square ({rows} x {cols})")]
    NotSquare { rows: usize, cols: usize },
}

impl Error {
    /// Wraps `self` as a feature failure, keeping an existing feature label.
    pub(crate) fn in_feature(self, stage: &'static str) -> Error {
        match self {
            e @ Error::Feature { .. } => e,
            other => Error::Feature {
                stage,
                source: Box::new(other),
            },
        }
    }
}
