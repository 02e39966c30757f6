//! Fixtures shared by the criterion benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use ssitls_core::handshake::{CredentialKind, EndpointConfig};
use ssitls_core::harness::{Flow, ScenarioSpec, World, WorldOptions};

/// A small deterministic credential pool.
pub fn world() -> World {
    World::generate(&WorldOptions {
        pool_size: 8,
        seed: Some([0xbe; 32]),
        ..Default::default()
    })
    .expect("fixture world")
}

/// The handshake configurations measured by the `handshake` bench.
pub fn flows() -> Vec<(&'static str, ScenarioSpec)> {
    use CredentialKind::{Vc, X509};
    let mut pinned = ScenarioSpec::new(Flow::Mutual, Some(Vc), Vc);
    pinned.pinning = true;
    let mut legacy = ScenarioSpec::new(Flow::Unilateral, None, X509);
    legacy.legacy_server = true;
    vec![
        ("x509", ScenarioSpec::new(Flow::Unilateral, None, X509)),
        ("vc", ScenarioSpec::new(Flow::Unilateral, None, Vc)),
        ("mutual-x509", ScenarioSpec::new(Flow::Mutual, Some(X509), X509)),
        ("mutual-vc", ScenarioSpec::new(Flow::Mutual, Some(Vc), Vc)),
        ("mutual-vc-pinned", pinned),
        ("hybrid-cx-sv", ScenarioSpec::new(Flow::Mutual, Some(X509), Vc)),
        ("hybrid-cv-sx", ScenarioSpec::new(Flow::Mutual, Some(Vc), X509)),
        ("fallback", legacy),
    ]
}

pub fn configs(world: &World, spec: &ScenarioSpec, seed: u64) -> (EndpointConfig, EndpointConfig) {
    world.configs(spec, &mut ChaCha20Rng::seed_from_u64(seed))
}
