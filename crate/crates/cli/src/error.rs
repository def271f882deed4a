use std::path::PathBuf;

use lqr_bridge::{BridgeError, Violation};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: parse error at line {line}, column {column} (at `{key_path}`): {message}")]
    Parse {
        path: PathBuf,
        key_path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid scenario: {}", .0.iter().map(|v| format!("{}: {}", v.field, v.message)).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Violation>),

    #[error("usage: {0}")]
    Usage(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Bridge(#[from] BridgeError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage/parse, 2 not converged, 3 infeasible.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Bridge(BridgeError::NotConverged(_)) => 2,
            CliError::Bridge(BridgeError::NotDominated { .. } | BridgeError::NotSpd { .. }) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
