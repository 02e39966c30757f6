use ssitls_bench::{configs, flows, world};
use ssitls_core::handshake::{run_handshake, TransportKind};

#[test]
fn every_fixture_flow_completes() {
    let w = world();
    for (name, spec) in flows() {
        let (c, s) = configs(&w, &spec, 1);
        let run = run_handshake(&c, &s, TransportKind::Memory);
        assert!(run.succeeded() && run.secrets_agree(), "{name}");
    }
}
