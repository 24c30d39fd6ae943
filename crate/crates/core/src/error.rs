use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: missing header row")]
    MissingHeader,
    #[error("csv: last header column must be named \"y\", found {0:?}")]
    MissingLabelColumn(String),
    #[error("csv line {line}: column {column}: {value:?} is not an integer")]
    NonInteger {
        line: u64,
        column: usize,
        value: String,
    },
    #[error("csv line {line}: column {column}: negative count {value}")]
    NegativeCount {
        line: u64,
        column: usize,
        value: i64,
    },
    #[error("csv line {line}: expected {expected} columns, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("labels are not dense: class {missing} is absent but {max} is present")]
    LabelGap { missing: usize, max: usize },
    #[error("need at least two classes, found {0}")]
    SingleClass(usize),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid keyword map: {0}")]
    InvalidKeywordMap(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSynthSpec(String),
    #[error("{got} labels for {expected} users")]
    LabelCount { expected: usize, got: usize },
    #[error("chunk size {chunk_size} is invalid for {n_rows} rows and {n_classes} classes")]
    ChunkSize {
        chunk_size: usize,
        n_rows: usize,
        n_classes: usize,
    },
    #[error("class {class} has {count} rows, fewer than the {k} folds requested")]
    ClassTooSmall {
        class: usize,
        count: usize,
        k: usize,
    },
    #[error("invalid cross-validation config: {0}")]
    InvalidCvConfig(String),

    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("feature subset must not be empty")]
    EmptySubset,
    #[error("feature index {index} out of range for {n_features} features")]
    FeatureOutOfRange { index: usize, n_features: usize },

    #[error("training rows are empty")]
    EmptyTrainingSet,
    #[error("training rows cover {present} of {n_classes} classes")]
    MissingClasses { present: usize, n_classes: usize },

    #[error("class count must be at least 2, got {0}")]
    TooFewClasses(usize),

    #[error("{n_features} features exceed the limit of {max}")]
    TooManyFeatures { n_features: usize, max: usize },
    #[error("invalid search config: {0}")]
    InvalidSearchConfig(String),

    #[error("{n_classes} classes exceed the 8 histogram slots of the model input")]
    TooManyClasses { n_classes: usize },
    #[error("model encoding mismatch: {0}")]
    EncodingMismatch(String),
    #[error("invalid training data: {0}")]
    InvalidTrainingData(String),
    #[error("invalid training config: {0}")]
    InvalidTrainConfig(String),
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("malformed model file: {0}")]
    ModelFormat(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
