use std::path::Path;
use thiserror::Error;

/// Top-level failure of a subcommand, carrying its process exit code:
/// 2 for validation problems (bad config, malformed files, bad dimensions),
/// 3 for numerical failures (non-convergence, lost definiteness).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    /// Wraps an I/O error with the path it concerns.
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Validation(format!("{}: {err}", path.display()))
    }
}

impl From<zigg::Error> for CliError {
    fn from(err: zigg::Error) -> Self {
        match err {
            zigg::Error::Numerical(_) | zigg::Error::NoConvergence { .. } => {
                CliError::Numerical(err.to_string())
            }
            _ => CliError::Validation(err.to_string()),
        }
    }
}
