use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    /// Malformed input; `line` is 1-based and counts the header.
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error(transparent)]
    Core(#[from] mlfpp_core::Error),

    #[error("threshold error: {0}")]
    Threshold(&'static str),

    #[error("too few events: {found} found, at least {needed} required")]
    TooFewEvents { found: usize, needed: usize },

    /// Relative efficiency with a zero or non-finite denominator.
    #[error("undefined efficiency for settings {settings:?}")]
    UndefinedEfficiency { settings: Vec<usize> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
