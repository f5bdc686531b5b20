use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("no member of phrase {0:?} is resolvable in the embedding store")]
    UnresolvablePhrase(Vec<String>),

    #[error("degenerate vector: {0}")]
    DegenerateVector(String),

    #[error("cannot draw negative samples from a vocabulary of size {0}")]
    CannotSample(usize),

    #[error("document {0} has no tokens")]
    DegenerateDocument(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: {detail}")]
    Divergence {
        epoch: usize,
        batch: usize,
        detail: String,
    },

    #[error("missing artifact {path}; run stage `{stage}` first")]
    MissingArtifact { stage: String, path: PathBuf },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Transport(_) => 3,
            Error::Divergence { .. } => 4,
            Error::Io { .. } => 1,
            _ => 2,
        }
    }
}
