use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: malformed JSON: {source}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("unknown label {label:?} in dialogue {dialogue_id}")]
    UnknownLabel { label: String, dialogue_id: String },

    #[error("duplicate dialogue_id {0}")]
    DuplicateDialogue(String),

    #[error("invalid dialogue {dialogue_id}: {reason}")]
    InvalidDialogue { dialogue_id: String, reason: String },

    #[error("turn index {index} out of range for dialogue {dialogue_id} with {len} turns")]
    TurnOutOfRange {
        dialogue_id: String,
        index: usize,
        len: usize,
    },

    #[error("invalid split request: {0}")]
    InvalidSplit(String),

    #[error("invalid template: {0}")]
    InvalidTemplate(String),

    #[error("label {0:?} is not in the label set")]
    LabelNotInSet(String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("cache miss for digest {0}")]
    CacheMiss(String),

    #[error("provider returned status {status}: {body}")]
    Provider { status: u16, body: String },

    #[error("retry cap of {attempts} attempts exhausted: {last}")]
    RetriesExhausted { attempts: u32, last: String },

    #[error("missing credentials: {0}")]
    Credentials(String),

    #[error("rationale mode {0} requires a rationale set")]
    MissingRationale(String),

    #[error("empty split: {0}")]
    EmptySplit(String),

    #[error("label set mismatch: {0}")]
    LabelSetMismatch(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error("rating {value} outside scale 1..={scale} (item {item}, rater {rater})")]
    RatingOutOfScale {
        value: u32,
        scale: u32,
        item: usize,
        rater: usize,
    },

    #[error("config validation failed:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("missing upstream artifact {0}")]
    MissingArtifact(PathBuf),

    #[error("config hash mismatch in {path}: expected {expected}, found {found}")]
    HashMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad configuration or inputs rather than by
    /// a failure while running.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Config(_)
            | Error::MalformedLine { .. }
            | Error::UnknownLabel { .. }
            | Error::DuplicateDialogue(_)
            | Error::InvalidDialogue { .. }
            | Error::InvalidTemplate(_)
            | Error::InvalidSplit(_)
            | Error::LabelNotInSet(_)
            | Error::MissingArtifact(_)
            | Error::HashMismatch { .. } => true,
            Error::Context { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
