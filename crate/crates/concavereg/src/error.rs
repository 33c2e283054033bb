use std::path::{Path, PathBuf};

use concavereg_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot ingest {path}: {msg}")]
    Ingest { path: PathBuf, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Config(String),
    #[error("{0} theorem check(s) violated")]
    Violated(usize),
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    /// 0 ok, 1 other, 2 enumeration cap, 3 ingestion, 4 oracle refusal.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(CoreError::CapExceeded { .. }) => 2,
            AppError::Core(CoreError::OracleRefused(_)) => 4,
            AppError::Ingest { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> AppError {
        AppError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn ingest(path: &Path, msg: impl ToString) -> AppError {
        AppError::Ingest { path: path.to_path_buf(), msg: msg.to_string() }
    }
}
