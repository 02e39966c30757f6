#![allow(dead_code)]

pub mod codec;
pub mod oracle;
pub mod vectors;

use std::sync::OnceLock;
use std::time::Duration;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use ssitls_core::handshake::{
    memory_pair_with_timeout, run_handshake, run_handshake_over, Alert, CredentialKind,
    EndpointConfig, FaultInjector, HandshakeError, HandshakeRun, Stage, TransportKind,
};
use ssitls_core::harness::{Flow, ScenarioSpec, World, WorldOptions};
use ssitls_core::wire::{CertificateTypeCode, CodePoints, DidMethodList};

pub use CredentialKind::{RawPublicKey as Rpk, Vc, X509};

/// Registered credentials are `did:iota:...`, code 0 in the method table.
pub const CREDENTIAL_METHOD: u16 = 0;
pub const METHOD_CODES: [u16; 4] = [0, 1, 2, 3];

pub fn world() -> &'static World {
    static W: OnceLock<World> = OnceLock::new();
    W.get_or_init(|| {
        World::generate(&WorldOptions {
            pool_size: 8,
            seed: Some([0x5e; 32]),
            ..Default::default()
        })
        .expect("fixture world")
    })
}

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn code(k: CredentialKind) -> CertificateTypeCode {
    k.code(&CodePoints::default())
}

/// Baseline, VC, both hybrid orientations and fallback, unilateral and
/// mutual where it applies.
pub fn four_flows() -> Vec<(&'static str, ScenarioSpec)> {
    let mut legacy = ScenarioSpec::new(Flow::Unilateral, None, X509);
    legacy.legacy_server = true;
    let mut legacy_mutual = ScenarioSpec::new(Flow::Mutual, Some(X509), X509);
    legacy_mutual.legacy_server = true;
    vec![
        ("baseline unilateral", ScenarioSpec::new(Flow::Unilateral, None, X509)),
        ("baseline mutual", ScenarioSpec::new(Flow::Mutual, Some(X509), X509)),
        ("vc unilateral", ScenarioSpec::new(Flow::Unilateral, None, Vc)),
        ("vc mutual", ScenarioSpec::new(Flow::Mutual, Some(Vc), Vc)),
        ("hybrid client x509 server vc", ScenarioSpec::new(Flow::Mutual, Some(X509), Vc)),
        ("hybrid client vc server x509", ScenarioSpec::new(Flow::Mutual, Some(Vc), X509)),
        ("fallback unilateral", legacy),
        ("fallback mutual", legacy_mutual),
    ]
}

pub fn configs(spec: &ScenarioSpec, seed: u64) -> (EndpointConfig, EndpointConfig) {
    world().configs(spec, &mut rng(seed))
}

pub fn run(spec: &ScenarioSpec, seed: u64) -> HandshakeRun {
    let (c, s) = configs(spec, seed);
    run_handshake(&c, &s, TransportKind::Memory)
}

pub fn stage_of(e: &HandshakeError) -> Option<Stage> {
    match e {
        HandshakeError::Local { stage, .. }
        | HandshakeError::Peer { stage, .. }
        | HandshakeError::Transport { stage, .. } => Some(*stage),
        HandshakeError::Config(_) => None,
    }
}

pub enum Direction {
    ClientToServer,
    ServerToClient,
}

/// Runs `spec` with one byte flipped at `offset` of one direction's stream.
pub fn run_tampered(spec: &ScenarioSpec, seed: u64, dir: Direction, offset: usize) -> HandshakeRun {
    let (c, s) = configs(spec, seed);
    let (cs, ss) = memory_pair_with_timeout(Duration::from_millis(500));
    match dir {
        Direction::ClientToServer => run_handshake_over(&c, &s, FaultInjector::new(cs, offset, 0x01), ss),
        Direction::ServerToClient => run_handshake_over(&c, &s, cs, FaultInjector::new(ss, offset, 0x01)),
    }
}

/// Randomized certificate-type support sets and did_methods lists.
#[derive(Debug, Clone)]
pub struct NegotiationCase {
    pub mutual: bool,
    pub client_offers_server: Vec<CredentialKind>,
    pub server_supports_server: Vec<CredentialKind>,
    pub client_offers_client: Vec<CredentialKind>,
    pub server_supports_client: Vec<CredentialKind>,
    pub client_methods: Vec<u16>,
    pub server_methods: Vec<u16>,
}

fn kinds() -> impl Strategy<Value = Vec<CredentialKind>> {
    Just(vec![X509, Rpk, Vc])
        .prop_shuffle()
        .prop_flat_map(|v| (1..=3usize).prop_map(move |n| v[..n].to_vec()))
}

fn methods() -> impl Strategy<Value = Vec<u16>> {
    Just(METHOD_CODES.to_vec())
        .prop_shuffle()
        .prop_flat_map(|v| (1..=v.len()).prop_map(move |n| v[..n].to_vec()))
}

pub fn negotiation_case() -> impl Strategy<Value = NegotiationCase> {
    (any::<bool>(), kinds(), kinds(), kinds(), kinds(), methods(), methods()).prop_map(
        |(mutual, cos, sss, coc, ssc, cm, sm)| NegotiationCase {
            mutual,
            client_offers_server: cos,
            server_supports_server: sss,
            client_offers_client: coc,
            server_supports_client: ssc,
            client_methods: cm,
            server_methods: sm,
        },
    )
}

/// Outcome predicted without the library's negotiation code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    Complete {
        server_type: CredentialKind,
        client_type: Option<CredentialKind>,
    },
    Abort(Alert),
}

impl NegotiationCase {
    pub fn expected(&self) -> Expected {
        let pick = |offer: &[CredentialKind], support: &[CredentialKind]| {
            offer.iter().copied().find(|k| support.contains(k))
        };
        let Some(server_type) = pick(&self.client_offers_server, &self.server_supports_server) else {
            return Expected::Abort(Alert::UnsupportedCertificate);
        };
        let client_type = if self.mutual {
            match pick(&self.client_offers_client, &self.server_supports_client) {
                Some(t) => Some(t),
                None => return Expected::Abort(Alert::UnsupportedCertificate),
            }
        } else {
            None
        };
        let vc = server_type == Vc || client_type == Some(Vc);
        let shared: Vec<u16> = self
            .client_methods
            .iter()
            .copied()
            .filter(|m| self.server_methods.contains(m))
            .collect();
        if vc && !shared.contains(&CREDENTIAL_METHOD) {
            return Expected::Abort(Alert::HandshakeFailure);
        }
        Expected::Complete {
            server_type,
            client_type,
        }
    }

    /// The violated rule: (a) own method outside the shared list, (b)
    /// disjoint type offers, (c) VC for server auth with an empty
    /// intersection.
    pub fn violation(&self) -> Option<char> {
        match self.expected() {
            Expected::Complete { .. } => None,
            Expected::Abort(Alert::UnsupportedCertificate) => Some('b'),
            Expected::Abort(_) => {
                let shared_empty = !self.client_methods.iter().any(|m| self.server_methods.contains(m));
                let server_vc = self
                    .client_offers_server
                    .iter()
                    .find(|k| self.server_supports_server.contains(k))
                    == Some(&Vc);
                Some(if shared_empty && server_vc { 'c' } else { 'a' })
            }
        }
    }

    pub fn configs(&self, seed: u64) -> (EndpointConfig, EndpointConfig) {
        let w = world();
        let mut r = rng(seed);
        let base = ScenarioSpec::new(Flow::Unilateral, None, X509);
        let (mut client, mut server) = w.configs(&base, &mut r);
        let codes = |ks: &[CredentialKind]| ks.iter().map(|k| code(*k)).collect::<Vec<_>>();

        server.supported_server_cert_types = codes(&self.server_supports_server);
        server.credentials = self
            .server_supports_server
            .iter()
            .map(|k| w.pool.pick(*k, &mut r))
            .collect();
        server.did_methods = DidMethodList::from_codes(&self.server_methods);
        client.supported_server_cert_types = codes(&self.client_offers_server);
        client.did_methods = DidMethodList::from_codes(&self.client_methods);
        if self.mutual {
            server.request_client_auth = true;
            server.supported_client_cert_types = codes(&self.server_supports_client);
            client.supported_client_cert_types = codes(&self.client_offers_client);
            client.credentials = self
                .client_offers_client
                .iter()
                .map(|k| w.pool.pick(*k, &mut r))
                .collect();
        }
        (client, server)
    }

    pub fn run(&self, seed: u64) -> HandshakeRun {
        let (c, s) = self.configs(seed);
        run_handshake(&c, &s, TransportKind::Memory)
    }
}

/// Checks one randomized case against the predicted outcome.
pub fn check_case(case: &NegotiationCase, seed: u64) -> Result<(), String> {
    let run = case.run(seed);
    match case.expected() {
        Expected::Complete {
            server_type,
            client_type,
        } => {
            let (Ok(c), Ok(s)) = (&run.client, &run.server) else {
                return Err(format!("expected completion: {:?} / {:?}", run.client.as_ref().err(), run.server.as_ref().err()));
            };
            if !run.secrets_agree() {
                return Err("secrets differ".into());
            }
            let n = &c.negotiation;
            if n.server_cert_type != code(server_type) || n.client_cert_type != client_type.map(code) {
                return Err(format!("negotiated {n:?}"));
            }
            // Soundness: each negotiated type is in both sides' sets.
            if !case.client_offers_server.iter().any(|k| code(*k) == n.server_cert_type)
                || !case.server_supports_server.iter().any(|k| code(*k) == n.server_cert_type)
            {
                return Err("server type outside a support set".into());
            }
            if s.negotiation != c.negotiation {
                return Err("endpoints disagree on the negotiation".into());
            }
            Ok(())
        }
        Expected::Abort(alert) => {
            if run.client.is_ok() || run.server.is_ok() {
                return Err(format!("violating configuration completed on one side ({:?})", case.violation()));
            }
            if run.failure() != Some(alert) || !run.consistent_failure() {
                return Err(format!(
                    "expected {alert}, got client {:?} server {:?}",
                    run.client.as_ref().err(),
                    run.server.as_ref().err()
                ));
            }
            let pre_finished = [&run.client, &run.server].iter().all(|r| {
                r.as_ref()
                    .err()
                    .and_then(stage_of)
                    .is_some_and(|s| s != Stage::ApplicationData)
            });
            if !pre_finished {
                return Err("abort after the handshake".into());
            }
            Ok(())
        }
    }
}
