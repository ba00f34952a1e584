use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid world config: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("knowledge base entry `{entry}`: {reason}")]
    Knowledge { entry: String, reason: String },

    #[error("unknown item `{0}`")]
    UnknownItem(String),

    #[error("decomposition exceeded depth cap {cap} at `{item}`")]
    DepthExceeded { item: String, cap: usize },

    #[error("blueprint: {0}")]
    Blueprint(String),

    #[error("provider transport failure: {0}")]
    Provider(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
