//! Command-level errors and their exit-code mapping: 1 for numerical or
//! threshold failures (the run was set up correctly but didn't succeed),
//! 2 for configuration and I/O problems (the run never started properly).

use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration text; `line` points at the offending line when the
    /// problem is tied to one.
    Config {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// The underlying computation failed (divergence, singular solve, …) or
    /// was asked for something invalid.
    Engine(tdnqs::error::Error),
    /// A benchmark ran to completion but missed its thresholds.
    Threshold { failed: Vec<String> },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 2,
            // Invalid inputs reaching the engine are configuration mistakes,
            // not numerical failures.
            CliError::Engine(e) if !e.is_numerical() => 2,
            CliError::Engine(_) | CliError::Threshold { .. } => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config {
                path,
                line: Some(line),
                message,
            } => write!(f, "{}:{line}: {message}", path.display()),
            CliError::Config {
                path,
                line: None,
                message,
            } => write!(f, "{}: {message}", path.display()),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Engine(e) => write!(f, "{e}"),
            CliError::Threshold { failed } => {
                write!(f, "benchmark thresholds missed: {}", failed.join(", "))
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<tdnqs::error::Error> for CliError {
    fn from(e: tdnqs::error::Error) -> Self {
        CliError::Engine(e)
    }
}
