use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("no instances")]
    NoInstances,
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("unknown label {label:?} (instance {id:?})")]
    UnknownLabel { id: String, label: String },
    #[error("instance {0:?} has empty text")]
    EmptyText(String),
    #[error("instance {0:?} is unlabeled")]
    Unlabeled(String),
    #[error("invalid label space: {0}")]
    LabelSpace(String),
    #[error("invalid split: {0}")]
    Split(String),
    #[error("token {index} has no POS tag")]
    MissingPosTag { index: usize },
    #[error("line {line}: sentence has no `# instance_id = ...` comment")]
    MissingInstanceId { line: usize },
    #[error("{message} at row {row}")]
    Embedding { row: usize, message: String },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("all symbols filtered out")]
    NoSymbols,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("block {block}: missing input for ids {}", .ids.join(", "))]
    MissingInput { block: String, ids: Vec<String> },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("{0}")]
    Format(String),
    #[error("metric error: {0}")]
    Metric(String),
    #[error("{phase}: {source}")]
    Phase {
        phase: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    pub fn in_phase(self, phase: &str) -> Self {
        Error::Phase {
            phase: phase.to_string(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by input data rather than by I/O or configuration.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::File { .. } | Error::Io(_) | Error::Config(_) => false,
            Error::Phase { source, .. } => source.is_data_error(),
            _ => true,
        }
    }
}
