//! Library half of the `driftcomp` command-line tool: scenario resolution,
//! runs, sweeps, verification and plotting. `main.rs` only parses arguments
//! and maps errors to exit codes.

pub mod output;
pub mod plot;
pub mod resolve;
pub mod run;
pub mod sweep;
pub mod verify;

use std::path::PathBuf;

use driftcomp::config::ConfigError;
use driftcomp::integrate::IntegrateError;
use thiserror::Error;

/// Environment variable naming the default parent directory for outputs.
pub const OUT_DIR_ENV: &str = "DRIFTCOMP_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("NOT_FOUND: {0:?} is neither a preset name nor a readable config file")]
    ScenarioNotFound(String),
    #[error("{code}: {message}")]
    Usage { code: &'static str, message: String },
    #[error("{code}: {err}", code = .0.code(), err = .0)]
    Numerical(IntegrateError<f64>),
    #[error("VERIFICATION_FAILED: {}", .0.join("; "))]
    Verification(Vec<String>),
    #[error("MALFORMED_SNAPSHOT: {path}: {message}")]
    MalformedSnapshot { path: PathBuf, message: String },
    #[error("IO_ERROR: {context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("PLOT_ERROR: {0}")]
    Plot(String),
}

impl CliError {
    /// Process exit code: 2 for bad input, 3 for numerical failure, 4 for a
    /// failed verification, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_)
            | CliError::ScenarioNotFound(_)
            | CliError::Usage { .. }
            | CliError::MalformedSnapshot { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Io { .. } | CliError::Plot(_) => 1,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }
}

impl From<IntegrateError<f64>> for CliError {
    fn from(e: IntegrateError<f64>) -> Self {
        CliError::Numerical(e)
    }
}

/// `DIR` from `--out`, else `$DRIFTCOMP_OUT_DIR/<id>`, else `runs/<id>`.
pub fn default_out_dir(explicit: Option<PathBuf>, scenario_id: &str) -> PathBuf {
    if let Some(dir) = explicit {
        return dir;
    }
    let parent = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
    parent.join(scenario_id)
}
