use std::path::PathBuf;

/// Error type shared across the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("duplicate question id `{0}`")]
    DuplicateId(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("term `{0}` has no collection statistics")]
    UnknownTerm(String),

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("unknown cluster `{0}`")]
    UnknownCluster(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no usable data: {0}")]
    NoData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("missing artifact `{path}`: {hint}")]
    MissingArtifact { path: PathBuf, hint: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
