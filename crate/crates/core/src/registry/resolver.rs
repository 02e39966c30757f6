use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::RngCore;

use super::{Ledger, RegistryError};
use crate::identity::{
    deserialize, verify_signature, Did, DidDocument, IdentityKeyPair, PublicKey,
};

pub type RequestId = [u8; 16];

/// Raw answer to a resolve request, before any channel checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryResponse {
    /// Sorted-key serialization of the DID Document.
    pub body: Vec<u8>,
    pub version: u64,
    /// Registry signature over `request_id || body`, when the registry signs.
    pub signature: Option<[u8; 64]>,
}

pub fn response_signing_input(request_id: &RequestId, body: &[u8]) -> Vec<u8> {
    [request_id.as_slice(), body].concat()
}

/// Something that answers resolve requests for a registry.
pub trait ResolverBackend: Send + Sync {
    fn fetch(&self, did: &Did, request_id: &RequestId) -> Result<RegistryResponse, RegistryError>;
}

/// Serves a [`Ledger`] directly, signing responses when it holds the
/// registry key.
pub struct LedgerService {
    ledger: Arc<Ledger>,
    signer: Option<IdentityKeyPair>,
}

impl LedgerService {
    pub fn new(ledger: Arc<Ledger>, signer: Option<IdentityKeyPair>) -> Self {
        Self { ledger, signer }
    }

    pub fn ledger(&self) -> &Arc<Ledger> {
        &self.ledger
    }
}

impl ResolverBackend for LedgerService {
    fn fetch(&self, did: &Did, request_id: &RequestId) -> Result<RegistryResponse, RegistryError> {
        let (doc, version) = self.ledger.lookup(did)?;
        let body = doc.canonical_bytes();
        let signature = self
            .signer
            .as_ref()
            .map(|k| k.sign(&response_signing_input(request_id, &body)));
        Ok(RegistryResponse {
            body,
            version,
            signature,
        })
    }
}

/// Network adversary between an endpoint and the registry. For DIDs in
/// `forged` it substitutes its own document; everything else is relayed.
pub struct MitmResolver {
    inner: Arc<dyn ResolverBackend>,
    forged: HashMap<Did, DidDocument>,
    /// A key the attacker signs substituted responses with. It is never the
    /// registry key.
    resign_with: Option<IdentityKeyPair>,
}

impl MitmResolver {
    pub fn new(inner: Arc<dyn ResolverBackend>, forged: HashMap<Did, DidDocument>) -> Self {
        Self {
            inner,
            forged,
            resign_with: None,
        }
    }

    pub fn resigning_with(mut self, key: IdentityKeyPair) -> Self {
        self.resign_with = Some(key);
        self
    }
}

pub fn mitm_wrap(
    inner: Arc<dyn ResolverBackend>,
    forged: HashMap<Did, DidDocument>,
) -> Arc<dyn ResolverBackend> {
    Arc::new(MitmResolver::new(inner, forged))
}

impl ResolverBackend for MitmResolver {
    fn fetch(&self, did: &Did, request_id: &RequestId) -> Result<RegistryResponse, RegistryError> {
        let Some(doc) = self.forged.get(did) else {
            return self.inner.fetch(did, request_id);
        };
        // Relay the genuine response's metadata, swapping in the forged body.
        let genuine = self.inner.fetch(did, request_id).ok();
        let body = doc.canonical_bytes();
        let signature = match &self.resign_with {
            Some(k) => Some(k.sign(&response_signing_input(request_id, &body))),
            None => genuine.as_ref().and_then(|g| g.signature),
        };
        Ok(RegistryResponse {
            body,
            version: genuine.map_or(1, |g| g.version),
            signature,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    Plain,
    Authenticated,
}

impl fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Plain => "plain",
            Self::Authenticated => "authenticated",
        })
    }
}

impl std::str::FromStr for ChannelMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(Self::Plain),
            "authenticated" => Ok(Self::Authenticated),
            other => Err(format!("unknown resolver mode `{other}`")),
        }
    }
}

/// An endpoint's connection to the registry.
///
/// In [`ChannelMode::Authenticated`] every response must carry a registry
/// signature over the request id and body that verifies under the
/// configured registry key.
pub struct ResolverChannel {
    mode: ChannelMode,
    registry_pk: Option<PublicKey>,
    backend: Arc<dyn ResolverBackend>,
    resolves: AtomicU64,
}

impl fmt::Debug for ResolverChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ResolverChannel")
            .field("mode", &self.mode)
            .field("resolves", &self.resolve_count())
            .finish_non_exhaustive()
    }
}

impl ResolverChannel {
    pub fn plain(backend: Arc<dyn ResolverBackend>) -> Self {
        Self {
            mode: ChannelMode::Plain,
            registry_pk: None,
            backend,
            resolves: AtomicU64::new(0),
        }
    }

    pub fn authenticated(backend: Arc<dyn ResolverBackend>, registry_pk: PublicKey) -> Self {
        Self {
            mode: ChannelMode::Authenticated,
            registry_pk: Some(registry_pk),
            backend,
            resolves: AtomicU64::new(0),
        }
    }

    pub fn mode(&self) -> ChannelMode {
        self.mode
    }

    /// Number of resolve calls made through this channel.
    pub fn resolve_count(&self) -> u64 {
        self.resolves.load(Ordering::SeqCst)
    }

    pub fn resolve(&self, did: &Did) -> Result<DidDocument, RegistryError> {
        self.resolves.fetch_add(1, Ordering::SeqCst);
        let mut request_id = [0u8; 16];
        rand::thread_rng().fill_bytes(&mut request_id);
        let resp = self.backend.fetch(did, &request_id)?;
        if self.mode == ChannelMode::Authenticated {
            let pk = self
                .registry_pk
                .as_ref()
                .expect("authenticated channels always carry the registry key");
            let ok = resp.signature.is_some_and(|sig| {
                verify_signature(pk, &response_signing_input(&request_id, &resp.body), &sig)
            });
            if !ok {
                return Err(RegistryError::BadRegistrySignature);
            }
        }
        let doc: DidDocument = deserialize(&resp.body)
            .map_err(|e| RegistryError::InvalidResponse(e.to_string()))?;
        if &doc.id != did {
            return Err(RegistryError::InvalidResponse(format!(
                "asked for {did}, got a document for {}",
                doc.id
            )));
        }
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::{generate_identity, Identity};
    use crate::registry::{sign_deactivation, Ledger};
    use crate::wire::DidMethodRegistry;

    fn ident(seed: &[u8]) -> Identity {
        generate_identity("iota", Some(seed), &DidMethodRegistry::default()).unwrap()
    }

    struct Setup {
        ledger: Arc<Ledger>,
        registry_key: IdentityKeyPair,
        victim: Identity,
    }

    fn setup() -> Setup {
        let ledger = Arc::new(Ledger::new());
        let victim = ident(b"victim");
        ledger.create(victim.document.clone()).unwrap();
        Setup {
            ledger,
            registry_key: IdentityKeyPair::from_seed(b"registry"),
            victim,
        }
    }

    #[test]
    fn resolve_counts_every_call() {
        let s = setup();
        let ch = ResolverChannel::plain(Arc::new(LedgerService::new(s.ledger.clone(), None)));
        assert_eq!(ch.resolve(&s.victim.did).unwrap(), s.victim.document);
        assert_eq!(ch.resolve_count(), 1);
        assert!(matches!(ch.resolve(&ident(b"x").did), Err(RegistryError::NotFound(_))));
        assert_eq!(ch.resolve_count(), 2);

        s.ledger
            .deactivate(&s.victim.did, &sign_deactivation(&s.victim.keypair, &s.victim.did))
            .unwrap();
        assert!(matches!(ch.resolve(&s.victim.did), Err(RegistryError::Deactivated(_))));
        assert_eq!(ch.resolve_count(), 3);
    }

    #[test]
    fn authenticated_channel_verifies() {
        let s = setup();
        let backend = Arc::new(LedgerService::new(s.ledger.clone(), Some(s.registry_key.clone())));
        let ch = ResolverChannel::authenticated(backend, s.registry_key.public_key());
        assert_eq!(ch.resolve(&s.victim.did).unwrap(), s.victim.document);

        // Signed by something that is not the registry.
        let rogue = Arc::new(LedgerService::new(s.ledger.clone(), Some(IdentityKeyPair::from_seed(b"rogue"))));
        let ch = ResolverChannel::authenticated(rogue, s.registry_key.public_key());
        assert_eq!(ch.resolve(&s.victim.did), Err(RegistryError::BadRegistrySignature));

        // Unsigned registry.
        let unsigned = Arc::new(LedgerService::new(s.ledger.clone(), None));
        let ch = ResolverChannel::authenticated(unsigned, s.registry_key.public_key());
        assert_eq!(ch.resolve(&s.victim.did), Err(RegistryError::BadRegistrySignature));
    }

    #[test]
    fn mitm_behaviour_by_mode() {
        let s = setup();
        let attacker = ident(b"attacker");
        let forged_doc = DidDocument::new(s.victim.did.clone(), attacker.keypair.public_key());
        let forged: HashMap<_, _> = [(s.victim.did.clone(), forged_doc.clone())].into();
        let honest = Arc::new(LedgerService::new(s.ledger.clone(), Some(s.registry_key.clone())));

        let plain = ResolverChannel::plain(mitm_wrap(honest.clone(), forged.clone()));
        assert_eq!(plain.resolve(&s.victim.did).unwrap(), forged_doc);

        let auth = ResolverChannel::authenticated(
            mitm_wrap(honest.clone(), forged.clone()),
            s.registry_key.public_key(),
        );
        assert_eq!(auth.resolve(&s.victim.did), Err(RegistryError::BadRegistrySignature));

        let resigning = MitmResolver::new(honest.clone(), forged).resigning_with(attacker.keypair.clone());
        let auth = ResolverChannel::authenticated(Arc::new(resigning), s.registry_key.public_key());
        assert_eq!(auth.resolve(&s.victim.did), Err(RegistryError::BadRegistrySignature));

        // Untargeted DIDs pass through.
        let other = ident(b"other");
        s.ledger.create(other.document.clone()).unwrap();
        let auth = ResolverChannel::authenticated(
            mitm_wrap(honest, HashMap::new()),
            s.registry_key.public_key(),
        );
        assert_eq!(auth.resolve(&other.did).unwrap(), other.document);
    }

    #[test]
    fn mismatched_document_rejected() {
        struct Liar(DidDocument);
        impl ResolverBackend for Liar {
            fn fetch(&self, _: &Did, _: &RequestId) -> Result<RegistryResponse, RegistryError> {
                Ok(RegistryResponse {
                    body: self.0.canonical_bytes(),
                    version: 1,
                    signature: None,
                })
            }
        }
        let a = ident(b"a");
        let b = ident(b"b");
        let ch = ResolverChannel::plain(Arc::new(Liar(b.document)));
        assert!(matches!(ch.resolve(&a.did), Err(RegistryError::InvalidResponse(_))));
    }
}
