use std::path::PathBuf;

/// Errors raised while loading data, fitting transforms, or evaluating.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}{}: {message}", line_suffix(*line))]
    Json {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
    #[error("format error in {path}{}: {message}", line_suffix(*line))]
    Format {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
    #[error("byte length mismatch: expected {expected} bytes, found {actual}")]
    ByteLength { expected: usize, actual: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("duplicate occurrence id {0:?}")]
    DuplicateId(String),
    #[error("occurrence id {id:?} not found in store{}", line_suffix(*line))]
    DanglingId { id: String, line: Option<usize> },
    #[error("empty period set for target {lemma:?}{}", line_suffix(*line))]
    EmptyPeriod { lemma: String, line: Option<usize> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("centered data has rank {rank}, below the {requested} requested components")]
    RankDeficient { rank: usize, requested: usize },
    #[error("evaluation undefined: {0}")]
    SingleClass(String),
    #[error("evaluation undefined: {0}")]
    ConstantVector(String),
    #[error("evaluation undefined: {0}")]
    InsufficientData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn line_suffix(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the inputs were well-formed but the requested statistic is
    /// undefined for them (single-class ROC input, constant rank vector).
    pub fn is_evaluation_undefined(&self) -> bool {
        matches!(
            self,
            Error::SingleClass(_) | Error::ConstantVector(_) | Error::InsufficientData(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
