//! Errors of the file and command layer.

use std::path::PathBuf;

use topoembed_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum TopoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed file. `row` and `col` are 1-based when known.
    #[error("{path}: {}{msg}", location(*row, *col))]
    Format {
        path: PathBuf,
        row: Option<usize>,
        col: Option<usize>,
        msg: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn location(row: Option<usize>, col: Option<usize>) -> String {
    match (row, col) {
        (Some(r), Some(c)) => format!("row {r}, column {c}: "),
        (Some(r), None) => format!("row {r}: "),
        (None, Some(c)) => format!("column {c}: "),
        (None, None) => String::new(),
    }
}

impl TopoError {
    pub fn format(path: impl Into<PathBuf>, row: Option<usize>, col: Option<usize>, msg: impl Into<String>) -> Self {
        TopoError::Format {
            path: path.into(),
            row,
            col,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TopoError::Io { path: path.into(), source }
    }

    /// 2 for bad usage or input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            TopoError::Core(e) => match e {
                CoreError::InvalidInput(_)
                | CoreError::InvalidParameter(_)
                | CoreError::InvalidGeometry(_)
                | CoreError::TooLarge { .. } => 2,
                _ => 3,
            },
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, TopoError>;
