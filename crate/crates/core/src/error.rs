use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: rating {rating} outside scale [{min}, {max}]")]
    Range {
        line: usize,
        rating: f64,
        min: f64,
        max: f64,
    },

    #[error("duplicate {0}")]
    Duplicate(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("unknown {kind} `{id}`")]
    NotFound { kind: &'static str, id: String },

    #[error("unknown value `{value}` for attribute `{attribute}`")]
    UnknownValue { attribute: String, value: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("similarity matrix does not cover {side} id `{id}`")]
    Coverage { side: &'static str, id: String },

    #[error("training diverged at epoch {epoch} (last finite epoch: {last_finite_epoch:?})")]
    Divergence {
        epoch: usize,
        last_finite_epoch: Option<usize>,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("malformed artifact: {0}")]
    Artifact(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

impl Clone for Error {
    /// I/O sources are not clonable; the copy keeps their kind and message.
    fn clone(&self) -> Self {
        match self {
            Error::Io { path, source } => Error::Io {
                path: path.clone(),
                source: std::io::Error::new(source.kind(), source.to_string()),
            },
            Error::Parse { line, message } => Error::parse(*line, message.clone()),
            Error::Range { line, rating, min, max } => Error::Range {
                line: *line,
                rating: *rating,
                min: *min,
                max: *max,
            },
            Error::Duplicate(s) => Error::Duplicate(s.clone()),
            Error::Empty(s) => Error::Empty(s),
            Error::NotFound { kind, id } => Error::NotFound { kind, id: id.clone() },
            Error::UnknownValue { attribute, value } => Error::UnknownValue {
                attribute: attribute.clone(),
                value: value.clone(),
            },
            Error::Schema(s) => Error::Schema(s.clone()),
            Error::Config(s) => Error::Config(s.clone()),
            Error::Precondition(s) => Error::Precondition(s.clone()),
            Error::Coverage { side, id } => Error::Coverage { side, id: id.clone() },
            Error::Divergence { epoch, last_finite_epoch } => Error::Divergence {
                epoch: *epoch,
                last_finite_epoch: *last_finite_epoch,
            },
            Error::Validation(s) => Error::Validation(s.clone()),
            Error::Artifact(s) => Error::Artifact(s.clone()),
        }
    }
}
