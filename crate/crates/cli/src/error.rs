use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}:{line}: {message}", .file.display())]
    Parse {
        file: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{}: gap in daily record, first missing date {date}", .file.display())]
    Gap { file: PathBuf, date: NaiveDate },
    #[error("duplicate manifest entry ({location}, {series_type})")]
    DuplicateKey {
        location: String,
        series_type: String,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] hydrofeat::Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        CliError::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}
