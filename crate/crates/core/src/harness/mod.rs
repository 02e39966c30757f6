//! Experiment runner: credential fixtures, benchmark scenarios with
//! self-checking laws, and the resolver man-in-the-middle demonstration.

mod attack;
mod bench;
mod scenario;
mod world;

pub use attack::*;
pub use bench::*;
pub use scenario::*;
pub use world::*;

use thiserror::Error;

use crate::handshake::{Alert, HandshakeError};
use crate::identity::IdentityError;
use crate::registry::RegistryError;

/// Environment variable overriding the registry endpoint.
pub const REGISTRY_ENV: &str = "SSITLS_REGISTRY";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("scenario line {line}: {reason}")]
    Scenario { line: usize, reason: String },
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Handshake(#[from] HandshakeError),
    #[error("law violated: {0}")]
    LawViolation(String),
    #[error("unexpected outcome: {0}")]
    UnexpectedOutcome(String),
    #[error("scenario inapplicable: {0}")]
    Inapplicable(String),
}

/// Process exit codes; a total function of the outcome class.
pub mod exit {
    use super::Alert;

    pub const SUCCESS: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const IO: u8 = 3;
    pub const LAW_VIOLATION: u8 = 4;
    pub const UNEXPECTED_OUTCOME: u8 = 5;
    pub const INAPPLICABLE: u8 = 6;
    pub const REGISTRY: u8 = 7;
    pub const IDENTITY: u8 = 8;
    /// The attack demo completed the impersonation, as expected in plain mode.
    pub const ATTACK_SUCCEEDED: u8 = 20;

    pub fn for_alert(alert: Alert) -> u8 {
        match alert {
            Alert::BadRecordMac => 30,
            Alert::HandshakeFailure => 31,
            Alert::BadCertificate => 32,
            Alert::UnsupportedCertificate => 33,
            Alert::DecodeError => 34,
            Alert::DecryptError => 35,
            Alert::CertificateRequired => 36,
        }
    }

    pub fn alert_for(code: u8) -> Option<Alert> {
        Alert::ALL.into_iter().find(|a| for_alert(*a) == code)
    }
}

impl HarnessError {
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Scenario { .. } => exit::USAGE,
            HarnessError::Identity(IdentityError::Io(_)) => exit::IO,
            HarnessError::Identity(_) => exit::IDENTITY,
            HarnessError::Registry(_) => exit::REGISTRY,
            HarnessError::Handshake(HandshakeError::Config(_)) => exit::USAGE,
            HarnessError::Handshake(e) => exit::for_alert(e.alert()),
            HarnessError::LawViolation(_) => exit::LAW_VIOLATION,
            HarnessError::UnexpectedOutcome(_) => exit::UNEXPECTED_OUTCOME,
            HarnessError::Inapplicable(_) => exit::INAPPLICABLE,
        }
    }
}
