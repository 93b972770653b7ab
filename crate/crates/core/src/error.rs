use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("no MP participates in at least {min_k} initiatives")]
    EmptyCohort { min_k: usize },

    #[error("invalid synthetic corpus spec: {0}")]
    SyntheticSpec(String),

    #[error("corpus needs at least {needed} initiatives, found {found}")]
    TooFewInitiatives { needed: usize, found: usize },

    #[error("all training documents are empty")]
    EmptyVocabulary,

    #[error("centroid of only empty vectors is undefined")]
    DegenerateCentroid,

    #[error("training failed: {0}")]
    Training(String),

    #[error("no score for MP {mp:?} on initiative {initiative:?}")]
    MissingScore { mp: String, initiative: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid suffix table line {line}: {message}")]
    SuffixTable { line: usize, message: String },

    #[error("ir-p scoring needs one document per MP, but {mp:?} has {count}")]
    IndexMode { mp: String, count: usize },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("model file: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for failures caused by the configuration rather than the data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}
