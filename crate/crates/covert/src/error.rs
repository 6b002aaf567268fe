use std::path::Path;

/// Failures of the command-line layer, each tied to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input: exit 2.
    #[error("{0}")]
    Parse(String),

    /// Well-formed input that fails semantic checks: exit 1.
    #[error("{0}")]
    Semantic(String),

    /// Solver, simulator or output failure: exit 3.
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Semantic(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Compute(_) => 3,
        }
    }

    pub(crate) fn read(path: &Path, e: std::io::Error) -> Self {
        CliError::Parse(format!("cannot read {}: {e}", path.display()))
    }

    pub(crate) fn write(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Compute(format!("cannot write {}: {e}", path.display()))
    }
}

impl From<covert_core::Error> for CliError {
    fn from(e: covert_core::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
