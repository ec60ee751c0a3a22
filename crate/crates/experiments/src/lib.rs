//! Simulation harness for symmetry search: synthetic scenarios, Monte Carlo
//! runners, configuration files, data ingestion and SVG plots.

pub mod app;
pub mod config;
pub mod ingest;
pub mod plot;
pub mod runners;
pub mod scenario;

/// Errors mapped onto the command-line exit codes.
#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, msg: String },
    #[error("data error: {0}")]
    Data(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ExperimentError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config {
            line: None,
            msg: msg.into(),
        }
    }

    /// 1 for configuration, 2 for data, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 1,
            Self::Data(_) => 2,
            Self::Runtime(_) | Self::Io(_) => 3,
        }
    }
}
