use thiserror::Error;

pub type Result<T> = std::result::Result<T, DctError>;

#[derive(Debug, Error)]
pub enum DctError {
    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("untagged review on day {day}")]
    UntaggedReview { day: usize },

    #[error("empty prefix: forward needs at least one day")]
    EmptyPrefix,

    #[error("invalid campaign {id}: {reason}")]
    InvalidCampaign { id: String, reason: String },

    #[error("campaign {0} has no known outcome")]
    UnknownOutcome(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("undefined metric: {0}")]
    Undefined(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error("json error at line {line}: {source}")]
    JsonLine {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DctError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        DctError::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        DctError::ShapeMismatch(msg.into())
    }
}
