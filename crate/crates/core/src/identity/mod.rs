//! Self-sovereign identity material: keys, DIDs, DID Documents, Verifiable
//! Credentials and the X.509 stand-in chains used by the baseline flow.

mod bundle;
mod chain;
mod credential;
mod did;
mod encoding;

pub use bundle::*;
pub use chain::*;
pub use credential::*;
pub use did::*;
pub use encoding::*;

use chrono::{DateTime, SubsecRound, Utc};
use thiserror::Error;

pub use ed25519_dalek::VerifyingKey as PublicKey;

pub type Timestamp = DateTime<Utc>;

/// Truncates to whole seconds, the precision credentials are serialized at.
pub fn whole_seconds(t: Timestamp) -> Timestamp {
    t.trunc_subsecs(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Validity {
    pub not_before: Timestamp,
    pub not_after: Timestamp,
}

impl Validity {
    pub fn new(not_before: Timestamp, not_after: Timestamp) -> Self {
        Self {
            not_before: whole_seconds(not_before),
            not_after: whole_seconds(not_after),
        }
    }

    /// `now` and the following `days`.
    pub fn days_from(now: Timestamp, days: i64) -> Self {
        Self::new(now, now + chrono::Duration::days(days))
    }

    pub fn check(&self, now: Timestamp) -> Result<(), IdentityError> {
        if now < self.not_before {
            Err(IdentityError::NotYetValid)
        } else if now > self.not_after {
            Err(IdentityError::Expired)
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentityError {
    #[error("DID method `{0}` is not in the method table")]
    UnknownMethod(String),
    #[error("malformed DID `{0}`")]
    InvalidDid(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("credential or certificate has expired")]
    Expired,
    #[error("credential or certificate is not yet valid")]
    NotYetValid,
    #[error("issuer signature does not verify")]
    BadIssuerSignature,
    #[error("validity window is empty or already over")]
    InvalidValidityWindow,
    #[error("bad PEM armor: {0}")]
    BadArmor(String),
    #[error("PEM label `{found}` where `{expected}` was expected")]
    LabelMismatch {
        expected: &'static str,
        found: String,
    },
    #[error("encoded object truncated")]
    Truncated,
    #[error("broken certificate chain: {0}")]
    BrokenChain(String),
    #[error("chain root is not a configured trust anchor")]
    UntrustedRoot,
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for IdentityError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
