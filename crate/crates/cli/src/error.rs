use std::path::PathBuf;
use std::process::ExitCode;

use srl_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(CoreError),
    #[error("numeric failure in episode {episode}: {source}")]
    Episode { episode: usize, source: CoreError },
    #[error("numeric failure: {0}")]
    Numeric(CoreError),
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::ChecksFailed { .. } => 1,
            CliError::Usage(_) | CliError::Read { .. } | CliError::Write { .. } | CliError::Config(_) => 2,
            CliError::Episode { .. } | CliError::Numeric(_) => 3,
        })
    }

    pub fn write(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Write { path, source }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Episode { episode, source } => CliError::Episode {
                episode,
                source: *source,
            },
            CoreError::Config(_) | CoreError::InvalidParams(_) => CliError::Config(e),
            other => CliError::Numeric(other),
        }
    }
}
