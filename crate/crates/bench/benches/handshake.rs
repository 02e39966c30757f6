use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ssitls_bench::{configs, flows, world};
use ssitls_core::handshake::{run_handshake, TransportKind};
use ssitls_core::harness::ScenarioSpec;
use ssitls_core::registry::ChannelMode;

fn full_handshakes(c: &mut Criterion) {
    let w = world();
    let mut group = c.benchmark_group("handshake");
    group.sample_size(20);
    for (name, spec) in flows() {
        let (client, server) = configs(&w, &spec, 7);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let run = run_handshake(&client, &server, TransportKind::Memory);
                assert!(run.succeeded());
                run
            })
        });
    }
    group.finish();
}

// Signed registry responses against plain ones.
fn resolver_channel(c: &mut Criterion) {
    let w = world();
    let mut group = c.benchmark_group("resolver");
    group.sample_size(20);
    let (_, vc) = flows().into_iter().find(|(n, _)| *n == "mutual-vc").unwrap();
    for mode in [ChannelMode::Plain, ChannelMode::Authenticated] {
        let spec = ScenarioSpec { resolver: mode, ..vc.clone() };
        let (client, server) = configs(&w, &spec, 11);
        group.bench_function(BenchmarkId::new("mutual-vc", mode), |b| {
            b.iter(|| run_handshake(&client, &server, TransportKind::Memory))
        });
    }
    group.finish();
}

criterion_group!(benches, full_handshakes, resolver_channel);
criterion_main!(benches);
