use std::collections::HashMap;
use std::sync::Arc;

use chrono::Utc;

use super::{HandshakeError, Role};
use crate::identity::{
    ChainBundle, ChainCertificate, Did, Identity, IdentityKeyPair, PublicKey, Timestamp,
    VerifiableCredential,
};
use crate::registry::ResolverChannel;
use crate::wire::{CertificateTypeCode, CodePoints, DidMethodList, DidMethodRegistry};

/// A VC together with the subject identity that holds it.
#[derive(Debug, Clone)]
pub struct VcBundle {
    pub holder: Identity,
    pub vc: VerifiableCredential,
}

/// Authentication material an endpoint can present.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Credential {
    Vc(VcBundle),
    X509(ChainBundle),
    RawPublicKey(IdentityKeyPair),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CredentialKind {
    Vc,
    X509,
    RawPublicKey,
}

impl CredentialKind {
    pub fn code(self, code_points: &CodePoints) -> CertificateTypeCode {
        match self {
            CredentialKind::Vc => code_points.vc_certificate_type,
            CredentialKind::X509 => CertificateTypeCode::X509,
            CredentialKind::RawPublicKey => CertificateTypeCode::RAW_PUBLIC_KEY,
        }
    }

    pub fn from_code(code: CertificateTypeCode, code_points: &CodePoints) -> Option<Self> {
        if code == code_points.vc_certificate_type {
            Some(CredentialKind::Vc)
        } else if code == CertificateTypeCode::X509 {
            Some(CredentialKind::X509)
        } else if code == CertificateTypeCode::RAW_PUBLIC_KEY {
            Some(CredentialKind::RawPublicKey)
        } else {
            None
        }
    }
}

impl Credential {
    pub fn kind(&self) -> CredentialKind {
        match self {
            Credential::Vc(_) => CredentialKind::Vc,
            Credential::X509(_) => CredentialKind::X509,
            Credential::RawPublicKey(_) => CredentialKind::RawPublicKey,
        }
    }

    /// Key that signs CertificateVerify.
    pub fn signing_key(&self) -> &IdentityKeyPair {
        match self {
            Credential::Vc(b) => &b.holder.keypair,
            Credential::X509(b) => &b.leaf_key,
            Credential::RawPublicKey(k) => k,
        }
    }
}

/// Source of "now" for validity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    System,
    Fixed(Timestamp),
}

impl Clock {
    pub fn now(&self) -> Timestamp {
        match self {
            Clock::System => Utc::now(),
            Clock::Fixed(t) => *t,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EndpointConfig {
    pub role: Role,
    /// Preference-ordered types for authenticating the client.
    pub supported_client_cert_types: Vec<CertificateTypeCode>,
    /// Preference-ordered types for authenticating the server.
    pub supported_server_cert_types: Vec<CertificateTypeCode>,
    pub did_methods: DidMethodList,
    /// Local credentials, at most one per kind is used.
    pub credentials: Vec<Credential>,
    /// Pinned issuer keys; a hit skips the issuer resolve.
    pub trusted_issuers: HashMap<Did, PublicKey>,
    pub trust_anchors: Vec<ChainCertificate>,
    pub trusted_raw_keys: Vec<PublicKey>,
    pub resolver: Option<Arc<ResolverChannel>>,
    /// Server only: send a CertificateRequest.
    pub request_client_auth: bool,
    /// Off simulates a peer without certificate-type negotiation.
    pub rfc7250_enabled: bool,
    /// Reuse resolve results within a single handshake.
    pub cache_resolves: bool,
    pub code_points: CodePoints,
    pub method_table: DidMethodRegistry,
    pub clock: Clock,
    /// Seeds randoms and ephemeral keys; `None` draws from the OS.
    pub rng_seed: Option<[u8; 32]>,
}

impl EndpointConfig {
    /// A baseline endpoint: X.509 both ways, no credentials.
    pub fn new(role: Role) -> Self {
        Self {
            role,
            supported_client_cert_types: vec![CertificateTypeCode::X509],
            supported_server_cert_types: vec![CertificateTypeCode::X509],
            did_methods: DidMethodList::default(),
            credentials: Vec::new(),
            trusted_issuers: HashMap::new(),
            trust_anchors: Vec::new(),
            trusted_raw_keys: Vec::new(),
            resolver: None,
            request_client_auth: false,
            rfc7250_enabled: true,
            cache_resolves: false,
            code_points: CodePoints::default(),
            method_table: DidMethodRegistry::default(),
            clock: Clock::System,
            rng_seed: None,
        }
    }

    pub fn client() -> Self {
        Self::new(Role::Client)
    }

    pub fn server() -> Self {
        Self::new(Role::Server)
    }

    pub fn vc_code(&self) -> CertificateTypeCode {
        self.code_points.vc_certificate_type
    }

    pub fn credential(&self, kind: CredentialKind) -> Option<&Credential> {
        self.credentials.iter().find(|c| c.kind() == kind)
    }

    pub fn credential_for(&self, code: CertificateTypeCode) -> Option<&Credential> {
        CredentialKind::from_code(code, &self.code_points).and_then(|k| self.credential(k))
    }

    /// Types this endpoint can present for its own direction.
    pub fn own_cert_types(&self) -> &[CertificateTypeCode] {
        match self.role {
            Role::Client => &self.supported_client_cert_types,
            Role::Server => &self.supported_server_cert_types,
        }
    }

    /// Types this endpoint accepts from its peer.
    pub fn peer_cert_types(&self) -> &[CertificateTypeCode] {
        match self.role {
            Role::Client => &self.supported_server_cert_types,
            Role::Server => &self.supported_client_cert_types,
        }
    }

    /// Checks the must-send rule and that every advertised type is backed by
    /// a credential or verification material.
    pub fn validate(&self) -> Result<(), HandshakeError> {
        let err = |m: String| Err(HandshakeError::Config(m));
        let vc = self.vc_code();
        for list in [&self.supported_client_cert_types, &self.supported_server_cert_types] {
            if list.is_empty() {
                return err("certificate type lists must not be empty".into());
            }
            if let Some(t) = list
                .iter()
                .find(|t| CredentialKind::from_code(**t, &self.code_points).is_none())
            {
                return err(format!("unsupported certificate type {t}"));
            }
        }
        let verifies_peer_vc = self.peer_cert_types().contains(&vc)
            && (self.role == Role::Client || self.request_client_auth);
        if verifies_peer_vc {
            if self.did_methods.is_empty() {
                return err("VC peer authentication needs a non-empty did_methods list".into());
            }
            if self.resolver.is_none() {
                return err("VC peer authentication needs a resolver".into());
            }
        }
        let presents_own = self.role == Role::Server || !self.credentials.is_empty();
        if presents_own {
            for t in self.own_cert_types() {
                if self.credential_for(*t).is_none() {
                    return err(format!("no local credential for offered type {t}"));
                }
            }
        }
        if self.own_cert_types().contains(&vc) && self.did_methods.is_empty() {
            return err("presenting a VC needs a non-empty did_methods list".into());
        }
        if self.role == Role::Server
            && !self.rfc7250_enabled
            && self.credential(CredentialKind::X509).is_none()
        {
            return err("a server without certificate-type negotiation needs an X.509 chain".into());
        }
        Ok(())
    }
}
