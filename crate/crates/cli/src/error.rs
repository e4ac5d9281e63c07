//! CLI error classification. Exit codes: 0 ok, 2 invalid arguments, 3 I/O
//! (including unparseable input files), 4 numerical failure.

use robust_estim::fileio::FileError;
use robust_estim::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    InvalidArgs(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidArgs(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::InvalidArgs(m) => write!(f, "invalid arguments: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::RankDeficient { .. } | CoreError::NonStationary => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::InvalidArgs(other.to_string()),
        }
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        match e {
            FileError::Io { .. } | FileError::Parse { .. } => CliError::Io(e.to_string()),
            FileError::Domain(d) => d.into(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
