use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use chrono::{TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use super::{Flow, HarnessError, ScenarioSpec};
use crate::handshake::{Clock, Credential, CredentialKind, EndpointConfig, VcBundle};
use crate::identity::{
    generate_identity, issue_vc, make_chain, ChainBundle, ChainCertificate, Did, DidDocument, Identity,
    IdentityKeyPair, PublicKey, Timestamp, Validity,
};
use crate::registry::{ChannelMode, Ledger, LedgerService, ResolverBackend, ResolverChannel};
use crate::wire::{CertificateTypeCode, DidMethodList, DidMethodRegistry};

pub const DEFAULT_POOL_SIZE: usize = 32;
const ISSUERS: usize = 4;

/// Pre-generated credentials runs pick from at random.
#[derive(Debug, Clone, Default)]
pub struct CredentialPool {
    pub vcs: Vec<VcBundle>,
    pub chains: Vec<ChainBundle>,
    pub raw_keys: Vec<IdentityKeyPair>,
}

impl CredentialPool {
    pub fn pick(&self, kind: CredentialKind, rng: &mut impl Rng) -> Credential {
        match kind {
            CredentialKind::Vc => Credential::Vc(self.vcs.choose(rng).expect("pool is non-empty").clone()),
            CredentialKind::X509 => {
                Credential::X509(self.chains.choose(rng).expect("pool is non-empty").clone())
            }
            CredentialKind::RawPublicKey => {
                Credential::RawPublicKey(self.raw_keys.choose(rng).expect("pool is non-empty").clone())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct WorldOptions {
    pub pool_size: usize,
    /// Makes every key and credential reproducible.
    pub seed: Option<[u8; 32]>,
    pub method: String,
    pub now: Timestamp,
}

impl Default for WorldOptions {
    fn default() -> Self {
        Self {
            pool_size: DEFAULT_POOL_SIZE,
            seed: None,
            method: "iota".into(),
            now: Utc.timestamp_opt(1_700_000_000, 0).single().expect("valid timestamp"),
        }
    }
}

/// A registry populated with issuers and credential pools.
pub struct World {
    pub ledger: Arc<Ledger>,
    pub registry_key: IdentityKeyPair,
    /// Key authenticated channels expect on registry responses.
    pub registry_pk: PublicKey,
    pub backend: Arc<dyn ResolverBackend>,
    pub issuers: Vec<Identity>,
    pub pool: CredentialPool,
    pub anchors: Vec<ChainCertificate>,
    pub method_table: DidMethodRegistry,
    pub did_methods: DidMethodList,
    pub now: Timestamp,
}

impl World {
    pub fn generate(opts: &WorldOptions) -> Result<Self, HarnessError> {
        let table = DidMethodRegistry::default();
        let mut rng = match opts.seed {
            Some(s) => ChaCha20Rng::from_seed(s),
            None => ChaCha20Rng::from_seed(rand::random()),
        };
        let ident = |seed: [u8; 32]| generate_identity(&opts.method, Some(&seed), &table);

        let ledger = Arc::new(Ledger::new());
        let registry_key = IdentityKeyPair::from_seed(&rng.gen::<[u8; 32]>());
        let validity = Validity::days_from(opts.now - chrono::Duration::days(1), 365);

        let mut issuers = Vec::with_capacity(ISSUERS);
        for _ in 0..ISSUERS {
            let issuer = ident(rng.gen::<[u8; 32]>())?;
            ledger.create(issuer.document.clone())?;
            issuers.push(issuer);
        }

        let mut pool = CredentialPool::default();
        for i in 0..opts.pool_size {
            let holder = ident(rng.gen::<[u8; 32]>())?;
            ledger.create(holder.document.clone())?;
            let claims = random_claims(i, &mut rng);
            let issuer = &issuers[i % ISSUERS];
            let vc = issue_vc(issuer, &holder.did, claims, validity)?;
            pool.vcs.push(VcBundle { holder, vc });

            let seed: [u8; 32] = rng.gen();
            let names = [
                format!("Root CA {i}"),
                format!("Intermediate CA {i}"),
                format!("device-{i}.example"),
            ];
            pool.chains.push(make_chain(
                [&names[0], &names[1], &names[2]],
                validity,
                Some(&seed),
            )?);
            pool.raw_keys.push(IdentityKeyPair::from_seed(&rng.gen::<[u8; 32]>()));
        }
        let anchors = pool.chains.iter().map(|c| c.root().clone()).collect();
        let did_methods = table
            .list_for(&[&opts.method])
            .expect("method checked by generate_identity");
        Ok(Self {
            backend: Arc::new(LedgerService::new(ledger.clone(), Some(registry_key.clone()))),
            ledger,
            registry_pk: registry_key.public_key(),
            registry_key,
            issuers,
            pool,
            anchors,
            method_table: table,
            did_methods,
            now: opts.now,
        })
    }

    /// Resolves through `backend` instead of the in-process ledger, e.g. an
    /// HTTP registry holding the same documents.
    pub fn with_backend(mut self, backend: Arc<dyn ResolverBackend>) -> Self {
        self.backend = backend;
        self
    }

    /// Resolves through a remote registry signing with `registry_pk`. The
    /// remote must hold [`World::documents`].
    pub fn with_remote(mut self, backend: Arc<dyn ResolverBackend>, registry_pk: PublicKey) -> Self {
        self.backend = backend;
        self.registry_pk = registry_pk;
        self
    }

    /// Every DID Document the world registered.
    pub fn documents(&self) -> impl Iterator<Item = &DidDocument> {
        self.issuers
            .iter()
            .map(|i| &i.document)
            .chain(self.pool.vcs.iter().map(|b| &b.holder.document))
    }

    pub fn channel(&self, mode: ChannelMode) -> Arc<ResolverChannel> {
        self.channel_over(self.backend.clone(), mode)
    }

    pub fn channel_over(&self, backend: Arc<dyn ResolverBackend>, mode: ChannelMode) -> Arc<ResolverChannel> {
        Arc::new(match mode {
            ChannelMode::Plain => ResolverChannel::plain(backend),
            ChannelMode::Authenticated => {
                ResolverChannel::authenticated(backend, self.registry_pk)
            }
        })
    }

    pub fn pinned_issuers(&self) -> HashMap<Did, PublicKey> {
        self.issuers
            .iter()
            .map(|i| (i.did.clone(), i.keypair.public_key()))
            .collect()
    }

    /// Everything an endpoint needs to verify any pool credential.
    fn verifier(&self, cfg: &mut EndpointConfig, mode: ChannelMode, pinning: bool) {
        cfg.did_methods = self.did_methods.clone();
        cfg.method_table = self.method_table.clone();
        cfg.trust_anchors = self.anchors.clone();
        cfg.trusted_raw_keys = self.pool.raw_keys.iter().map(|k| k.public_key()).collect();
        cfg.resolver = Some(self.channel(mode));
        if pinning {
            cfg.trusted_issuers = self.pinned_issuers();
        }
        cfg.clock = Clock::Fixed(self.now);
    }

    /// Client and server configs for one run of `spec`, with credentials
    /// drawn at random from the pool.
    pub fn configs(&self, spec: &ScenarioSpec, rng: &mut impl Rng) -> (EndpointConfig, EndpointConfig) {
        let cp = Default::default();
        let code = |k: CredentialKind| k.code(&cp);

        let mut server = EndpointConfig::server();
        self.verifier(&mut server, spec.resolver, spec.pinning);
        server.supported_server_cert_types = vec![code(spec.server_cred)];
        server.credentials = vec![self.pool.pick(spec.server_cred, rng)];
        server.rfc7250_enabled = !spec.legacy_server;
        server.rng_seed = Some(rng.gen());

        let mut client = EndpointConfig::client();
        self.verifier(&mut client, spec.resolver, spec.pinning);
        client.supported_server_cert_types = if spec.legacy_server {
            // A VC-capable client that can still fall back.
            vec![CertificateTypeCode::VC, CertificateTypeCode::X509]
        } else {
            vec![code(spec.server_cred)]
        };
        client.rng_seed = Some(rng.gen());

        if let (Flow::Mutual, Some(kind)) = (spec.flow, spec.client_cred) {
            server.request_client_auth = true;
            server.supported_client_cert_types = vec![code(kind)];
            client.supported_client_cert_types = vec![code(kind)];
            client.credentials = vec![self.pool.pick(kind, rng)];
        }
        (client, server)
    }
}

fn random_claims(i: usize, rng: &mut impl Rng) -> BTreeMap<String, serde_json::Value> {
    let kinds = ["temperature-sensor", "camera", "gateway", "smart-lock", "meter"];
    let mut claims = BTreeMap::new();
    claims.insert("deviceType".to_string(), json!(kinds[i % kinds.len()]));
    claims.insert("serial".to_string(), json!(format!("SN-{:08x}", rng.gen::<u32>())));
    for extra in 0..rng.gen_range(0..4) {
        claims.insert(format!("attribute{extra}"), json!(rng.gen_range(0..1_000_000)));
    }
    claims
}
