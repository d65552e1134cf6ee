use thiserror::Error;

/// Errors surfaced by the knowledge-base crate.
#[derive(Debug, Error)]
pub enum KbError {
    /// A referenced entity, article, or document does not exist.
    #[error("not found: {0}")]
    NotFound(String),

    /// A query filter violates an operation's preconditions.
    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    /// Malformed input data (bad date, bad enum name, schema violation).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An input source could not be read at all.
    #[error("failed to read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// An output target could not be written.
    #[error("failed to write {path}")]
    WriteIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, KbError>;
