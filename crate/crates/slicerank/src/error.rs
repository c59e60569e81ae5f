use std::path::{Path, PathBuf};

use slicerank_core::Error as CoreError;

/// Errors surfaced by the command line, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    BadConfig { path: PathBuf, message: String },

    #[error("{path}: {message}")]
    BadData { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Numerical(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 1 usage or configuration, 2 data validation, 3 numerical abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Numerical(_) => 3,
            CliError::Core(CoreError::Config(_)) => 1,
            CliError::Core(_) => 2,
            CliError::BadData { .. } => 2,
            CliError::Io { .. } | CliError::BadConfig { .. } | CliError::Usage(_) => 1,
        }
    }

    /// Attaches a file path to a core error raised while reading it.
    pub fn in_file(path: &Path, e: CoreError) -> Self {
        match e {
            CoreError::Config(message) => CliError::BadConfig {
                path: path.to_path_buf(),
                message,
            },
            e if e.is_numerical() => CliError::Core(e),
            e => CliError::BadData {
                path: path.to_path_buf(),
                message: e.to_string(),
            },
        }
    }
}
