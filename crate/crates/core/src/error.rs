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

    #[error("{source_name}:{line}: {message}")]
    Record {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("duplicate {what} `{key}`")]
    Duplicate { what: &'static str, key: String },

    #[error("invalid resource {name}: {message}")]
    Resource { name: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("sentence `{id}`: {message}")]
    Sentence { id: String, message: String },

    #[error("no annotation for prediction `{id}` word {word_index}")]
    Unjoinable { id: String, word_index: usize },

    #[error("missing scene graph for image(s): {}", .0.join(", "))]
    MissingSceneGraph(Vec<String>),

    #[error("{0}")]
    Empty(&'static str),

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

    pub(crate) fn sentence(id: &str, message: impl Into<String>) -> Self {
        Error::Sentence {
            id: id.to_string(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag used in CLI error summaries.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Record { .. } => "record",
            Error::Duplicate { .. } => "duplicate",
            Error::Resource { .. } => "resource",
            Error::Config(_) => "config",
            Error::Sentence { .. } => "sentence",
            Error::Unjoinable { .. } => "unjoinable",
            Error::MissingSceneGraph(_) => "missing_scene_graph",
            Error::Empty(_) => "empty",
            Error::Json(_) => "json",
        }
    }
}
