use std::path::PathBuf;

use thiserror::Error;

/// What went wrong on a single svmlight line.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("missing label")]
    MissingLabel,
    #[error("label `{0}` is not one of +1, -1, 1, 0")]
    BadLabel(String),
    #[error("token `{0}` is not of the form idx:value")]
    BadToken(String),
    #[error("feature index `{0}` is not a positive integer")]
    BadIndex(String),
    #[error("feature index {idx} follows {prev}; indices must be strictly increasing")]
    NonIncreasingIndex { prev: usize, idx: usize },
    #[error("feature index {0} appears more than once")]
    DuplicateIndex(usize),
    #[error("value `{0}` is not a finite number")]
    NonFinite(String),
    #[error("feature index {idx} exceeds the declared dimension {dim}")]
    IndexBeyondDimension { idx: usize, dim: usize },
    #[error("file mixes 0 and -1 labels")]
    MixedLabelConventions,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },
    #[error("dataset has a single class: {m_plus} positive, {m_minus} negative samples")]
    SingleClass { m_plus: usize, m_minus: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate problem: {0}")]
    Degenerate(String),
    #[error("empty active set at lambda0 = {lambda0:e}: theta0 is not a dual optimum")]
    EmptyActiveSet { lambda0: f64 },
    #[error("infeasible dual point: {0}")]
    InfeasibleDual(String),
    #[error("inconsistent bound geometry: {0}")]
    Inconsistent(String),
    #[error(
        "solver stopped at the iteration cap ({iterations}) with gap {gap:e} at lambda {lambda:e}"
    )]
    NotConverged {
        iterations: usize,
        gap: f64,
        lambda: f64,
    },
    #[error("at lambda ratio {ratio} (rule {rule}): {source}")]
    PathStep {
        ratio: f64,
        rule: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, kind: ParseErrorKind) -> Self {
        Error::Parse { line, kind }
    }
}
