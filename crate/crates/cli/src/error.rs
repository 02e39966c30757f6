use std::path::PathBuf;

use ssitls_core::handshake::HandshakeError;
use ssitls_core::harness::{exit, HarnessError};
use ssitls_core::identity::IdentityError;
use ssitls_core::registry::RegistryError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{0}")]
    Usage(String),
    #[error("{}:{line}:{column}: {reason}", path.display())]
    Claims {
        path: PathBuf,
        line: usize,
        column: usize,
        reason: String,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<IdentityError> for CliError {
    fn from(e: IdentityError) -> Self {
        HarnessError::from(e).into()
    }
}

impl From<RegistryError> for CliError {
    fn from(e: RegistryError) -> Self {
        HarnessError::from(e).into()
    }
}

impl From<HandshakeError> for CliError {
    fn from(e: HandshakeError) -> Self {
        HarnessError::from(e).into()
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Harness(e) => e.exit_code(),
            CliError::Usage(_) | CliError::Claims { .. } => exit::USAGE,
            CliError::Io(_) => exit::IO,
        }
    }
}
