//! Library half of the `rrcov` command: model-file parsing, the run
//! manifest, table rendering, and one function per subcommand. `main.rs` only
//! parses arguments and routes output.

pub mod commands;
pub mod manifest;
pub mod model_file;
pub mod table;
pub mod validate;

use thiserror::Error;

pub use commands::{Format, RunOptions, Toggles};
pub use manifest::RunManifest;
pub use model_file::parse_model;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("{0}")]
    PdRegime(String),
    #[error("{0}")]
    Resource(String),
    #[error("invariant check failed: {0}")]
    Invariant(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Validation(_) => 4,
            CliError::PdRegime(_) => 5,
            CliError::Resource(_) => 6,
            CliError::Invariant(_) => 7,
        }
    }
}

impl From<rrcov::Error> for CliError {
    fn from(e: rrcov::Error) -> Self {
        use rrcov::Error as E;
        match e {
            E::NotPositiveDefinite { .. } => CliError::PdRegime(e.to_string()),
            E::RunawayPath { .. } => CliError::Resource(e.to_string()),
            E::InvalidConfig(_) | E::UnsupportedDimension { .. } => CliError::Usage(e.to_string()),
            E::InternalConsistency(_) => CliError::Invariant(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
