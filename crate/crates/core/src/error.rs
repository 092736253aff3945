use std::path::PathBuf;

/// Errors produced anywhere in the fitting pipeline or the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter or configuration value is out of its valid range.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data violates a structural requirement (lengths, ordering, finiteness).
    #[error("input error: {0}")]
    Input(String),

    /// Factorization failed even after the full jitter escalation.
    #[error("numerical error: {message} (jitter levels tried: {jitter_levels:?})")]
    Numerical {
        message: String,
        jitter_levels: Vec<f64>,
    },

    /// A metric is undefined for the given inputs.
    #[error("metric error: {0}")]
    Metric(String),

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An error raised inside a named pipeline stage.
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The innermost error, skipping stage annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
