use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("malformed token {token:?} at position {position}")]
    MalformedToken { token: String, position: usize },

    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid word boundaries: {0}")]
    Boundary(String),

    #[error("vocabulary alignment failed at word {word}: {reason}")]
    VocabularyAlignment { word: usize, reason: String },

    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("writer oracle exceeded {max_len} tokens")]
    OracleRunaway { max_len: usize },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("record {id}: {source}")]
    Record { id: usize, source: Box<Error> },

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn index(index: usize, len: usize) -> Self {
        Error::Index { index, len }
    }

    pub(crate) fn in_record(self, id: usize) -> Self {
        match self {
            Error::Record { .. } => self,
            other => Error::Record {
                id,
                source: Box::new(other),
            },
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
