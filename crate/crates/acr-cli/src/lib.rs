//! Experiment harness around `acr-core`: flat-file configs, dataset
//! assembly, and the `fit-model` / `train` / `ablate-lambda` / `eval`
//! commands with their CSV and SVG artifacts.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod svg;

use acr_core::AcrError;

/// Harness-level failure: either an enumerated list of configuration
/// problems or an error bubbled up from the core library.
#[derive(Debug)]
pub enum CliError {
    Config(Vec<String>),
    Core(AcrError),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self::Config(vec![message.into()])
    }

    /// Process exit code: 2 config, 3 parse, 4 numerical, 5 io, 1 anything
    /// else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Core(AcrError::Parse { .. }) => 3,
            Self::Core(AcrError::Numerical(_)) => 4,
            Self::Core(AcrError::Io(_)) => 5,
            Self::Core(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(errors) => {
                writeln!(f, "invalid configuration:")?;
                for e in errors {
                    writeln!(f, "  - {e}")?;
                }
                Ok(())
            }
            Self::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<AcrError> for CliError {
    fn from(e: AcrError) -> Self {
        Self::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Core(AcrError::Io(e))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
