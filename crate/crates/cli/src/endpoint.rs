//! Flags shared by `server` and `client`, and the report they print.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use ssitls_core::handshake::{
    Credential, CredentialKind, EndpointConfig, EndpointReport, VcBundle,
};
use ssitls_core::harness::{kind_name, parse_kind};
use ssitls_core::identity::{
    decode_chain_pem, decode_pem, load_chain_bundle, read_key, DidDocument, IdentityBundle, PublicKey,
};
use ssitls_core::registry::{ChannelMode, HttpResolver, ResolverChannel};
use ssitls_core::wire::{CodePoints, DidMethodRegistry};

use crate::error::CliError;

#[derive(Debug, Args)]
pub struct EndpointArgs {
    /// Own VC bundle directory (key, did-document.pem, vc.pem).
    #[arg(long)]
    pub vc: Option<PathBuf>,
    /// Own certificate chain directory (key, chain.pem).
    #[arg(long)]
    pub chain: Option<PathBuf>,
    /// Own raw public key, as a key file.
    #[arg(long)]
    pub raw_key: Option<PathBuf>,
    /// Certificate types for authenticating the server, most preferred first.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind, default_value = "x509")]
    pub server_types: Vec<CredentialKind>,
    /// Certificate types for authenticating the client, most preferred first.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind, default_value = "x509")]
    pub client_types: Vec<CredentialKind>,
    /// DID methods this endpoint can resolve, e.g. `iota,web`.
    #[arg(long, value_delimiter = ',')]
    pub did_methods: Vec<String>,
    /// PEM file whose self-signed certificates are trust anchors.
    #[arg(long)]
    pub trust_anchor: Vec<PathBuf>,
    /// Hex Ed25519 key accepted for raw-public-key peers.
    #[arg(long)]
    pub trust_raw_key: Vec<String>,
    /// DID Document (PEM) of an issuer whose key is pinned.
    #[arg(long)]
    pub pin_issuer: Vec<PathBuf>,
    #[arg(long, default_value = "plain")]
    pub resolver: ChannelMode,
    /// Hex key the registry signs responses with (authenticated resolver).
    #[arg(long)]
    pub registry_pk: Option<String>,
    /// Behave like a peer without certificate-type negotiation.
    #[arg(long)]
    pub no_rfc7250: bool,
    /// Reuse resolved documents within the handshake.
    #[arg(long)]
    pub cache_resolves: bool,
}

pub fn parse_public_key(hex_key: &str) -> Result<PublicKey, CliError> {
    let bytes: [u8; 32] = hex::decode(hex_key.trim())
        .ok()
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| CliError::Usage(format!("`{hex_key}` is not a 64-digit hex key")))?;
    PublicKey::from_bytes(&bytes).map_err(|e| CliError::Usage(format!("invalid public key: {e}")))
}

impl EndpointArgs {
    pub fn configure(
        &self,
        mut cfg: EndpointConfig,
        registry: Option<&str>,
        table: &DidMethodRegistry,
    ) -> Result<EndpointConfig, CliError> {
        let cp = CodePoints::default();
        cfg.supported_server_cert_types = self.server_types.iter().map(|k| k.code(&cp)).collect();
        cfg.supported_client_cert_types = self.client_types.iter().map(|k| k.code(&cp)).collect();
        let names: Vec<&str> = self.did_methods.iter().map(String::as_str).collect();
        cfg.did_methods = table
            .list_for(&names)
            .ok_or_else(|| CliError::Usage(format!("unknown DID method in {names:?}")))?;
        cfg.method_table = table.clone();
        cfg.rfc7250_enabled = !self.no_rfc7250;
        cfg.cache_resolves = self.cache_resolves;

        if let Some(dir) = &self.vc {
            let bundle = IdentityBundle::load(dir)?;
            let vc = bundle
                .vc
                .ok_or_else(|| CliError::Usage(format!("{} holds no vc.pem", dir.display())))?;
            cfg.credentials.push(Credential::Vc(VcBundle {
                holder: bundle.identity,
                vc,
            }));
        }
        if let Some(dir) = &self.chain {
            cfg.credentials.push(Credential::X509(load_chain_bundle(dir)?));
        }
        if let Some(path) = &self.raw_key {
            cfg.credentials.push(Credential::RawPublicKey(read_key(path)?));
        }
        for path in &self.trust_anchor {
            let chain = decode_chain_pem(&fs::read_to_string(path)?)?;
            cfg.trust_anchors.extend(chain.into_iter().filter(|c| c.is_self_signed()));
        }
        for k in &self.trust_raw_key {
            cfg.trusted_raw_keys.push(parse_public_key(k)?);
        }
        let mut pins = HashMap::new();
        for path in &self.pin_issuer {
            let doc: DidDocument = decode_pem(&fs::read_to_string(path)?)?;
            pins.insert(doc.id.clone(), doc.public_key);
        }
        cfg.trusted_issuers = pins;

        if let Some(url) = registry {
            let backend = Arc::new(HttpResolver::new(url));
            cfg.resolver = Some(Arc::new(match self.resolver {
                ChannelMode::Plain => ResolverChannel::plain(backend),
                ChannelMode::Authenticated => {
                    let pk = self.registry_pk.as_deref().ok_or_else(|| {
                        CliError::Usage("--resolver authenticated needs --registry-pk".into())
                    })?;
                    ResolverChannel::authenticated(backend, parse_public_key(pk)?)
                }
            }));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn type_name(cfg: &EndpointConfig, code: ssitls_core::wire::CertificateTypeCode) -> String {
    CredentialKind::from_code(code, &cfg.code_points)
        .map(|k| kind_name(k).to_string())
        .unwrap_or_else(|| code.to_string())
}

pub fn print_report(cfg: &EndpointConfig, r: &EndpointReport) {
    let n = &r.negotiation;
    let m = &r.metrics;
    println!(
        "negotiated      server={} client={} fallback={}",
        type_name(cfg, n.server_cert_type),
        n.client_cert_type.map_or("-".to_string(), |c| type_name(cfg, c)),
        n.fallback
    );
    match &r.peer {
        Some(p) => println!(
            "peer            {} key {}",
            p.did.as_ref().map_or_else(|| type_name(cfg, p.cert_type), |d| d.to_string()),
            hex::encode(p.public_key.as_bytes())
        ),
        None => println!("peer            unauthenticated"),
    }
    println!("did_resolves    {}", m.did_resolves);
    println!("bytes           sent {} received {}", m.bytes_sent, m.bytes_received);
    println!(
        "identity bytes  sent {}+{} received {}+{}",
        m.pk_objects_sent.public_keys,
        m.pk_objects_sent.signatures,
        m.pk_objects_received.public_keys,
        m.pk_objects_received.signatures
    );
    println!("handshake       {:.3} ms", m.wall_clock.as_secs_f64() * 1e3);
}
