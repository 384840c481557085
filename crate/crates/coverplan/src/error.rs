use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: at {}: {message}", path.display(), if pointer.is_empty() { "/" } else { pointer })]
    Schema {
        path: PathBuf,
        pointer: String,
        message: String,
    },
    #[error("{0}")]
    Input(String),
    /// Geometry the planner cannot handle.
    #[error("{0}")]
    Unsupported(coverplan_core::Error),
    #[error("{0}")]
    Core(coverplan_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Unsupported(_) => 2,
            _ => 1,
        }
    }
}

/// Classifies planner failures: bad geometry maps to exit code 2, the rest
/// to input errors.
pub fn planning(e: coverplan_core::Error) -> CliError {
    use coverplan_core::Error as E;
    match e {
        E::UnsupportedStart | E::Degenerate(_) | E::InvalidPolygon(_) => CliError::Unsupported(e),
        _ => CliError::Core(e),
    }
}
