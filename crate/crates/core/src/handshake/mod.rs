//! TLS 1.3-style client and server handshakes with certificate-type
//! negotiation (X.509, RawPublicKey, VC) and `did_methods` negotiation.
//!
//! One flight layout covers every supported flow:
//!
//! ```text
//! Client                                         Server
//! ClientHello (+cert types, +did_methods)  -------->
//!                                               ServerHello
//!                          {EncryptedExtensions (+selected types, +did_methods)}
//!                                        {CertificateRequest}*
//!                                               {Certificate}
//!                                         {CertificateVerify}
//!                                  <--------       {Finished}
//! {Certificate}*
//! {CertificateVerify}*
//! {Finished}                               -------->
//! [Application data]                       <------->  [Application data]
//! ```
//!
//! `{}` is protected under handshake traffic keys, `[]` under application
//! traffic keys, `*` appears only when the server requests client auth.

mod auth;
mod client;
mod config;
mod key_schedule;
mod negotiation;
mod run;
mod server;
mod transport;

pub use auth::*;
pub use client::client_handshake;
pub use config::*;
pub use key_schedule::*;
pub use negotiation::*;
pub use run::*;
pub use server::server_handshake;
pub use transport::*;

use std::fmt;

use thiserror::Error;

use crate::wire::WireError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Client,
    Server,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Client => "client",
            Role::Server => "server",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Alert {
    BadRecordMac,
    HandshakeFailure,
    BadCertificate,
    UnsupportedCertificate,
    DecodeError,
    DecryptError,
    CertificateRequired,
}

impl Alert {
    pub fn code(self) -> u8 {
        match self {
            Alert::BadRecordMac => 20,
            Alert::HandshakeFailure => 40,
            Alert::BadCertificate => 42,
            Alert::UnsupportedCertificate => 43,
            Alert::DecodeError => 50,
            Alert::DecryptError => 51,
            Alert::CertificateRequired => 116,
        }
    }

    /// Unknown descriptions are reported as `handshake_failure`.
    pub fn from_code(code: u8) -> Self {
        match code {
            20 => Alert::BadRecordMac,
            42 => Alert::BadCertificate,
            43 => Alert::UnsupportedCertificate,
            50 => Alert::DecodeError,
            51 => Alert::DecryptError,
            116 => Alert::CertificateRequired,
            _ => Alert::HandshakeFailure,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Alert::BadRecordMac => "bad_record_mac",
            Alert::HandshakeFailure => "handshake_failure",
            Alert::BadCertificate => "bad_certificate",
            Alert::UnsupportedCertificate => "unsupported_certificate",
            Alert::DecodeError => "decode_error",
            Alert::DecryptError => "decrypt_error",
            Alert::CertificateRequired => "certificate_required",
        }
    }

    pub const ALL: [Alert; 7] = [
        Alert::BadRecordMac,
        Alert::HandshakeFailure,
        Alert::BadCertificate,
        Alert::UnsupportedCertificate,
        Alert::DecodeError,
        Alert::DecryptError,
        Alert::CertificateRequired,
    ];
}

impl fmt::Display for Alert {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where in the handshake an endpoint was when it stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    ClientHello,
    ServerHello,
    EncryptedExtensions,
    CertificateRequest,
    Certificate,
    CertificateVerify,
    Finished,
    ClientCertificate,
    ClientCertificateVerify,
    ClientFinished,
    ApplicationData,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HandshakeError {
    #[error("aborted with {alert} at {stage:?}: {reason}")]
    Local {
        alert: Alert,
        stage: Stage,
        reason: String,
    },
    #[error("peer aborted with {alert} while we were at {stage:?}")]
    Peer { alert: Alert, stage: Stage },
    #[error("transport failure at {stage:?}: {reason}")]
    Transport { stage: Stage, reason: String },
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
}

impl HandshakeError {
    /// The alert this failure corresponds to; transport failures surface as
    /// `handshake_failure`.
    pub fn alert(&self) -> Alert {
        match self {
            HandshakeError::Local { alert, .. } | HandshakeError::Peer { alert, .. } => *alert,
            HandshakeError::Transport { .. } | HandshakeError::Config(_) => Alert::HandshakeFailure,
        }
    }

    pub(crate) fn local(alert: Alert, stage: Stage, reason: impl Into<String>) -> Self {
        HandshakeError::Local {
            alert,
            stage,
            reason: reason.into(),
        }
    }
}

/// Alert for a malformed or unexpected peer message.
pub(crate) fn wire_alert(e: &WireError) -> Alert {
    match e {
        WireError::AuthTagMismatch => Alert::BadRecordMac,
        _ => Alert::DecodeError,
    }
}
