//! Experiment harness around `rnewt-core`: configuration ingestion, solver
//! dispatch, CSV trace persistence, parameter sweeps, and static SVG
//! convergence plots.

pub mod config;
pub mod plot;
pub mod runner;
pub mod trace_io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("trace schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 1 for configuration problems, 2 for runtime
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 1,
            _ => 2,
        }
    }
}
