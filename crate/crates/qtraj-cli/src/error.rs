use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: line {line}: unknown key `{key}`")]
    UnknownKey { path: PathBuf, line: usize, key: String },
    #[error("{path}: line {line}: {msg}")]
    Syntax { path: PathBuf, line: usize, msg: String },
    #[error("{path}: missing required key `{key}`")]
    MissingKey { path: PathBuf, key: &'static str },
    #[error("{path}: key `{key}`: {msg}")]
    BadValue { path: PathBuf, key: String, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] qtraj::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 3,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
