use std::fmt;

use qclab::QclabError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error{}: {field}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        field: String,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] QclabError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("plot: {0}")]
    Plot(String),
    #[error("dataset conversion: {0}")]
    Convert(String),
}

impl HarnessError {
    pub fn config(line: Option<usize>, field: impl Into<String>, message: impl fmt::Display) -> Self {
        HarnessError::Config {
            line,
            field: field.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn csv(path: impl AsRef<std::path::Path>, source: csv::Error) -> Self {
        HarnessError::Csv {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// 2 for invalid configs, 3 for everything that fails while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            HarnessError::Core(QclabError::Config(_)) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
