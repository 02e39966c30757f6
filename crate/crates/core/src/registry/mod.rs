//! Mock DLT acting as root of trust for DID Documents.
//!
//! The [`Ledger`] holds documents; a [`ResolverBackend`] answers resolve
//! requests for it (in process, over HTTP, or through an adversary); a
//! [`ResolverChannel`] is an endpoint's view of the registry and enforces
//! the channel's security mode.

mod http;
mod ledger;
mod resolver;

pub use http::*;
pub use ledger::*;
pub use resolver::*;

use thiserror::Error;

use crate::identity::IdentityError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("{0} not found")]
    NotFound(String),
    #[error("{0} has been deactivated")]
    Deactivated(String),
    #[error("{0} already exists")]
    AlreadyExists(String),
    #[error("control proof does not verify under the registered key")]
    BadControlProof,
    #[error("registry response signature missing or invalid")]
    BadRegistrySignature,
    #[error("invalid DID Document: {0}")]
    InvalidDocument(String),
    #[error("invalid registry response: {0}")]
    InvalidResponse(String),
    #[error("registry transport: {0}")]
    Transport(String),
}

impl From<IdentityError> for RegistryError {
    fn from(e: IdentityError) -> Self {
        Self::InvalidDocument(e.to_string())
    }
}
