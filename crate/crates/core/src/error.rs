use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numerical invariant of an input was violated. The first field names it.
    #[error("{invariant} violated: {detail}")]
    Invariant {
        invariant: &'static str,
        detail: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested construction would exceed a configured size cap.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn invariant(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Invariant {
            invariant,
            detail: detail.into(),
        }
    }

    /// True for errors caused by input that failed to parse, as opposed to
    /// input that parsed but violates a numerical invariant.
    pub fn is_parse_error(&self) -> bool {
        matches!(self, Error::Json { .. })
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
