use std::collections::HashMap;
use std::ops::AddAssign;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::{Alert, Credential, CredentialKind, EndpointConfig, PeerIdentity, Role};
use crate::identity::{
    decode_der, encode_der, verify_chain, verify_signature, verify_vc, ChainCertificate, Did,
    DidDocument, IdentityKeyPair, PublicKey, Timestamp, VerifiableCredential,
};
use crate::registry::ResolverChannel;
use crate::wire::{
    Certificate, CertificateEntry, CertificateTypeCode, CertificateVerify, CodePoints,
    DidMethodList, DidMethodRegistry, ED25519,
};

const SERVER_CONTEXT: &[u8] = b"TLS 1.3, server CertificateVerify";
const CLIENT_CONTEXT: &[u8] = b"TLS 1.3, client CertificateVerify";

/// Bytes of long-term identity material carried in a flight: public keys
/// and signatures. Ephemeral key shares are not identity material.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PkObjectBytes {
    pub public_keys: usize,
    pub signatures: usize,
}

impl PkObjectBytes {
    pub fn total(&self) -> usize {
        self.public_keys + self.signatures
    }
}

impl AddAssign for PkObjectBytes {
    fn add_assign(&mut self, rhs: Self) {
        self.public_keys += rhs.public_keys;
        self.signatures += rhs.signatures;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("credential of kind {found:?} cannot be sent as certificate type {expected}")]
pub struct CredentialTypeMismatch {
    pub expected: CertificateTypeCode,
    pub found: CredentialKind,
}

/// Builds the Certificate message for `cred` under the negotiated type and
/// reports the identity objects it carries.
pub fn build_certificate(
    cred: &Credential,
    negotiated: CertificateTypeCode,
    code_points: &CodePoints,
) -> Result<(Certificate, PkObjectBytes), CredentialTypeMismatch> {
    if cred.kind().code(code_points) != negotiated {
        return Err(CredentialTypeMismatch {
            expected: negotiated,
            found: cred.kind(),
        });
    }
    let (entries, objects) = match cred {
        Credential::Vc(b) => {
            let objects = PkObjectBytes {
                public_keys: 0,
                signatures: b.vc.proof.as_ref().map_or(0, |p| p.proof_value.len()),
            };
            (vec![CertificateEntry::new(encode_der(&b.vc))], objects)
        }
        Credential::X509(b) => {
            let links = b.transmitted();
            let objects = PkObjectBytes {
                public_keys: links.iter().map(|c| c.subject_pk.as_bytes().len()).sum(),
                signatures: links.iter().map(|c| c.signature.len()).sum(),
            };
            let entries = links
                .iter()
                .map(|c| CertificateEntry::new(c.to_bytes()))
                .collect();
            (entries, objects)
        }
        Credential::RawPublicKey(k) => {
            let pk = k.public_key().to_bytes();
            let objects = PkObjectBytes {
                public_keys: pk.len(),
                signatures: 0,
            };
            (vec![CertificateEntry::new(pk.to_vec())], objects)
        }
    };
    Ok((
        Certificate {
            context: Vec::new(),
            entries,
        },
        objects,
    ))
}

/// The bytes a CertificateVerify signature covers.
pub fn certificate_verify_input(role: Role, transcript_hash: &[u8]) -> Vec<u8> {
    let context = match role {
        Role::Server => SERVER_CONTEXT,
        Role::Client => CLIENT_CONTEXT,
    };
    let mut out = vec![0x20u8; 64];
    out.extend_from_slice(context);
    out.push(0);
    out.extend_from_slice(transcript_hash);
    out
}

pub fn build_certificate_verify(
    key: &IdentityKeyPair,
    transcript_hash: &[u8],
    role: Role,
) -> CertificateVerify {
    CertificateVerify {
        scheme: ED25519,
        signature: key.sign(&certificate_verify_input(role, transcript_hash)).to_vec(),
    }
}

/// `role` is the sender's role.
pub fn verify_certificate_verify(
    pk: &PublicKey,
    cv: &CertificateVerify,
    transcript_hash: &[u8],
    role: Role,
) -> bool {
    cv.scheme == ED25519
        && verify_signature(pk, &certificate_verify_input(role, transcript_hash), &cv.signature)
}

/// Why peer authentication failed, with the alert to send.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{alert}: {reason}")]
pub struct AuthFailure {
    pub alert: Alert,
    pub reason: String,
}

fn bad_cert(reason: impl Into<String>) -> AuthFailure {
    AuthFailure {
        alert: Alert::BadCertificate,
        reason: reason.into(),
    }
}

/// Resolves through a channel, counting calls and optionally caching
/// within one handshake.
pub struct Resolutions<'a> {
    channel: &'a ResolverChannel,
    cache: Option<HashMap<Did, DidDocument>>,
    count: u64,
    elapsed: Duration,
}

impl<'a> Resolutions<'a> {
    pub fn new(channel: &'a ResolverChannel, cache: bool) -> Self {
        Self {
            channel,
            cache: cache.then(HashMap::new),
            count: 0,
            elapsed: Duration::ZERO,
        }
    }

    /// Resolves actually sent to the registry.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Time spent waiting on the registry.
    pub fn elapsed(&self) -> Duration {
        self.elapsed
    }

    pub fn resolve(&mut self, did: &Did) -> Result<DidDocument, AuthFailure> {
        if let Some(doc) = self.cache.as_ref().and_then(|c| c.get(did)) {
            return Ok(doc.clone());
        }
        self.count += 1;
        let start = Instant::now();
        let result = self.channel.resolve(did);
        self.elapsed += start.elapsed();
        let doc = result.map_err(|e| bad_cert(format!("resolving {did}: {e}")))?;
        if let Some(c) = self.cache.as_mut() {
            c.insert(did.clone(), doc.clone());
        }
        Ok(doc)
    }
}

/// Result of authenticating a VC peer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VcPeer {
    pub public_key: PublicKey,
    pub did: Did,
    pub issuer: Did,
}

/// Decode, check, verify the issuer proof, enforce the shared method list
/// and resolve the subject's key.
pub fn authenticate_peer_vc(
    cert: &Certificate,
    shared_methods: &DidMethodList,
    method_table: &DidMethodRegistry,
    trusted_issuers: &HashMap<Did, PublicKey>,
    resolutions: &mut Resolutions<'_>,
    now: Timestamp,
) -> Result<VcPeer, AuthFailure> {
    let [entry] = cert.entries.as_slice() else {
        return Err(bad_cert(format!(
            "VC certificate must carry one entry, got {}",
            cert.entries.len()
        )));
    };
    let vc: VerifiableCredential =
        decode_der(&entry.cert_data).map_err(|e| bad_cert(format!("decoding VC: {e}")))?;
    let issuer_pk = match trusted_issuers.get(&vc.issuer) {
        Some(pk) => *pk,
        None => resolutions.resolve(&vc.issuer)?.public_key,
    };
    let subject = verify_vc(&vc, &issuer_pk, now).map_err(|e| bad_cert(format!("VC rejected: {e}")))?;
    let in_shared = method_table
        .code_of(subject.method())
        .is_some_and(|c| shared_methods.contains(c));
    if !in_shared {
        return Err(AuthFailure {
            alert: Alert::HandshakeFailure,
            reason: format!("subject method `{}` is not in the shared list", subject.method()),
        });
    }
    let doc = resolutions.resolve(&subject)?;
    Ok(VcPeer {
        public_key: doc.public_key,
        did: subject,
        issuer: vc.issuer,
    })
}

pub fn authenticate_peer_x509(
    cert: &Certificate,
    anchors: &[ChainCertificate],
    now: Timestamp,
) -> Result<PublicKey, AuthFailure> {
    let chain = cert
        .entries
        .iter()
        .map(|e| ChainCertificate::from_bytes(&e.cert_data))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| bad_cert(format!("decoding chain: {e}")))?;
    verify_chain(&chain, anchors, now).map_err(|e| bad_cert(format!("chain rejected: {e}")))
}

pub fn authenticate_peer_rpk(cert: &Certificate, trusted: &[PublicKey]) -> Result<PublicKey, AuthFailure> {
    let [entry] = cert.entries.as_slice() else {
        return Err(bad_cert("raw public key certificate must carry one entry"));
    };
    let pk = <[u8; 32]>::try_from(entry.cert_data.as_slice())
        .ok()
        .and_then(|b| PublicKey::from_bytes(&b).ok())
        .ok_or_else(|| bad_cert("malformed raw public key"))?;
    if !trusted.contains(&pk) {
        return Err(bad_cert("raw public key is not trusted"));
    }
    Ok(pk)
}

/// Dispatches on the negotiated peer type. Returns the peer identity and
/// the identity objects its Certificate carried.
pub(crate) fn authenticate_peer(
    cfg: &EndpointConfig,
    cert_type: CertificateTypeCode,
    cert: &Certificate,
    shared_methods: &DidMethodList,
    resolutions: &mut Option<Resolutions<'_>>,
) -> Result<(PeerIdentity, PkObjectBytes), AuthFailure> {
    let now = cfg.clock.now();
    match CredentialKind::from_code(cert_type, &cfg.code_points) {
        Some(CredentialKind::Vc) => {
            let r = resolutions.as_mut().ok_or_else(|| AuthFailure {
                alert: Alert::HandshakeFailure,
                reason: "no resolver configured for VC peers".into(),
            })?;
            let peer = authenticate_peer_vc(
                cert,
                shared_methods,
                &cfg.method_table,
                &cfg.trusted_issuers,
                r,
                now,
            )?;
            let identity = PeerIdentity {
                cert_type,
                public_key: peer.public_key,
                did: Some(peer.did),
            };
            Ok((identity, PkObjectBytes { public_keys: 0, signatures: 64 }))
        }
        Some(CredentialKind::X509) => {
            let pk = authenticate_peer_x509(cert, &cfg.trust_anchors, now)?;
            let n = cert.entries.len();
            let identity = PeerIdentity {
                cert_type,
                public_key: pk,
                did: None,
            };
            Ok((identity, PkObjectBytes { public_keys: 32 * n, signatures: 64 * n }))
        }
        Some(CredentialKind::RawPublicKey) => {
            let pk = authenticate_peer_rpk(cert, &cfg.trusted_raw_keys)?;
            let identity = PeerIdentity {
                cert_type,
                public_key: pk,
                did: None,
            };
            Ok((identity, PkObjectBytes { public_keys: 32, signatures: 0 }))
        }
        None => Err(AuthFailure {
            alert: Alert::UnsupportedCertificate,
            reason: format!("unknown certificate type {cert_type}"),
        }),
    }
}
