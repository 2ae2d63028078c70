use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] wsn_gossip::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn exit_code(&self) -> i32 {
        use wsn_gossip::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Sim(
                E::InvalidParameter(_)
                | E::InvalidNode { .. }
                | E::Disconnected { .. }
                | E::UnconnectableTopology { .. }
                | E::DimensionMismatch { .. }
                | E::Parse { .. },
            ) => EXIT_CONFIG,
            CliError::Sim(_) | CliError::Io { .. } => EXIT_RUNTIME,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
