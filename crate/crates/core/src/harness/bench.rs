use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

use super::{kind_name, HarnessError, ScenarioSpec, World};
use crate::handshake::{
    run_handshake, Alert, CredentialKind, EndpointReport, HandshakeRun, PkObjectBytes,
};

/// Identity-object bytes one endpoint transmits when authenticating with
/// `kind`: certificate contents plus the CertificateVerify signature.
pub fn expected_pk_objects(kind: CredentialKind) -> PkObjectBytes {
    match kind {
        // Leaf and intermediate: two keys, two link signatures, one CV.
        CredentialKind::X509 => PkObjectBytes {
            public_keys: 2 * 32,
            signatures: 3 * 64,
        },
        // Issuer proof and CV.
        CredentialKind::Vc => PkObjectBytes {
            public_keys: 0,
            signatures: 2 * 64,
        },
        CredentialKind::RawPublicKey => PkObjectBytes {
            public_keys: 32,
            signatures: 64,
        },
    }
}

/// Measurements of one successful run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSample {
    pub latency_ms: f64,
    pub resolve_ms: f64,
    pub bytes_client_to_server: u64,
    pub bytes_server_to_client: u64,
    pub pk_server_to_client: PkObjectBytes,
    pub pk_client_to_server: PkObjectBytes,
    pub client_resolves: u64,
    pub server_resolves: u64,
}

impl RunSample {
    pub fn from_reports(client: &EndpointReport, server: &EndpointReport) -> Self {
        let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
        Self {
            latency_ms: ms(client.metrics.wall_clock),
            resolve_ms: ms(client.metrics.resolve_time + server.metrics.resolve_time),
            bytes_client_to_server: client.metrics.bytes_sent,
            bytes_server_to_client: server.metrics.bytes_sent,
            pk_server_to_client: server.metrics.pk_objects_sent,
            pk_client_to_server: client.metrics.pk_objects_sent,
            client_resolves: client.metrics.did_resolves,
            server_resolves: server.metrics.did_resolves,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub stddev: f64,
}

impl Stats {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return Self::default();
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            stddev: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub spec: ScenarioSpec,
    pub samples: Vec<RunSample>,
    /// Alerts of failed runs, in run order.
    pub failures: Vec<Alert>,
}

impl ScenarioReport {
    pub fn latency(&self) -> Stats {
        Stats::of(self.samples.iter().map(|s| s.latency_ms))
    }

    pub fn resolve_time(&self) -> Stats {
        Stats::of(self.samples.iter().map(|s| s.resolve_ms))
    }

    pub fn bytes_client_to_server(&self) -> Stats {
        Stats::of(self.samples.iter().map(|s| s.bytes_client_to_server as f64))
    }

    pub fn bytes_server_to_client(&self) -> Stats {
        Stats::of(self.samples.iter().map(|s| s.bytes_server_to_client as f64))
    }

    /// The per-run value when every run agrees, `None` otherwise.
    fn constant<T: PartialEq + Copy>(&self, f: impl Fn(&RunSample) -> T) -> Option<T> {
        let first = f(self.samples.first()?);
        self.samples.iter().all(|s| f(s) == first).then_some(first)
    }

    pub fn pk_server_to_client(&self) -> Option<PkObjectBytes> {
        self.constant(|s| s.pk_server_to_client)
    }

    pub fn pk_client_to_server(&self) -> Option<PkObjectBytes> {
        self.constant(|s| s.pk_client_to_server)
    }

    pub fn client_resolves_total(&self) -> u64 {
        self.samples.iter().map(|s| s.client_resolves).sum()
    }

    pub fn server_resolves_total(&self) -> u64 {
        self.samples.iter().map(|s| s.server_resolves).sum()
    }

    /// Resolve-count law and identity-object accounting.
    pub fn check_laws(&self) -> Vec<String> {
        let mut v = Vec::new();
        let name = &self.spec.name;
        if !self.failures.is_empty() {
            v.push(format!("{name}: {} of {} runs failed", self.failures.len(), self.spec.repetitions));
        }
        let reps = self.samples.len() as u64;
        let (c, s) = self.spec.expected_resolves();
        if self.client_resolves_total() != reps * c {
            v.push(format!(
                "{name}: client resolves {} != {reps} x {c}",
                self.client_resolves_total()
            ));
        }
        if self.server_resolves_total() != reps * s {
            v.push(format!(
                "{name}: server resolves {} != {reps} x {s}",
                self.server_resolves_total()
            ));
        }
        let expect_s2c = Some(expected_pk_objects(self.spec.server_cred));
        if self.pk_server_to_client() != expect_s2c {
            v.push(format!(
                "{name}: server->client identity objects {:?} != {:?}",
                self.pk_server_to_client(),
                expect_s2c
            ));
        }
        let expect_c2s = Some(self.spec.client_cred.map(expected_pk_objects).unwrap_or_default());
        if self.pk_client_to_server() != expect_c2s {
            v.push(format!(
                "{name}: client->server identity objects {:?} != {:?}",
                self.pk_client_to_server(),
                expect_c2s
            ));
        }
        v
    }

    pub fn to_record(&self) -> Value {
        let pk = |p: Option<PkObjectBytes>| match p {
            Some(p) => json!({"public_keys": p.public_keys, "signatures": p.signatures, "total": p.total()}),
            None => Value::Null,
        };
        let stats = |s: Stats| json!({"mean": s.mean, "stddev": s.stddev});
        json!({
            "scenario": self.spec.name,
            "spec": self.spec.to_string(),
            "flow": self.spec.flow.to_string(),
            "client_cred": self.spec.client_cred.map(kind_name),
            "server_cred": kind_name(self.spec.server_cred),
            "resolver": self.spec.resolver.to_string(),
            "pinning": self.spec.pinning,
            "legacy_server": self.spec.legacy_server,
            "transport": self.spec.transport.to_string(),
            "repetitions": self.spec.repetitions,
            "successes": self.samples.len(),
            "failures": self.failures.len(),
            "latency_ms": stats(self.latency()),
            "resolve_ms": stats(self.resolve_time()),
            "bytes_client_to_server": stats(self.bytes_client_to_server()),
            "bytes_server_to_client": stats(self.bytes_server_to_client()),
            "pk_object_bytes_server_to_client": pk(self.pk_server_to_client()),
            "pk_object_bytes_client_to_server": pk(self.pk_client_to_server()),
            "did_resolves_client": self.client_resolves_total(),
            "did_resolves_server": self.server_resolves_total(),
            "did_resolves_total": self.client_resolves_total() + self.server_resolves_total(),
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub scenarios: Vec<ScenarioReport>,
}

impl BenchReport {
    pub fn check_laws(&self) -> Result<(), HarnessError> {
        let violations: Vec<String> = self.scenarios.iter().flat_map(|s| s.check_laws()).collect();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::LawViolation(violations.join("; ")))
        }
    }

    /// One JSON object per line, one line per scenario.
    pub fn to_json_lines(&self) -> String {
        self.scenarios
            .iter()
            .map(|s| s.to_record().to_string() + "\n")
            .collect()
    }

    /// Human-readable tables: identity objects and bytes, then latency and
    /// resolves.
    pub fn render_table(&self) -> String {
        let pk = |p: Option<PkObjectBytes>| match p {
            Some(p) if p.total() == 0 => "-".to_string(),
            Some(p) => format!("{}+{}={}", p.public_keys, p.signatures, p.total()),
            None => "varies".to_string(),
        };
        let mut out = String::new();
        let _ = writeln!(out, "Data sent per handshake [bytes]");
        let _ = writeln!(
            out,
            "{:<28} {:>16} {:>16} {:>10} {:>10}",
            "scenario", "pk s->c", "pk c->s", "total s->c", "total c->s"
        );
        for s in &self.scenarios {
            let _ = writeln!(
                out,
                "{:<28} {:>16} {:>16} {:>10.0} {:>10.0}",
                s.spec.name,
                pk(s.pk_server_to_client()),
                pk(s.pk_client_to_server()),
                s.bytes_server_to_client().mean,
                s.bytes_client_to_server().mean,
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Handshake latency and DID resolutions [ms]");
        let _ = writeln!(
            out,
            "{:<28} {:>6} {:>18} {:>14} {:>12} {:>6}",
            "scenario", "runs", "latency", "resolve time", "resolves c/s", "fails"
        );
        for s in &self.scenarios {
            let l = s.latency();
            let n = s.samples.len().max(1) as f64;
            let _ = writeln!(
                out,
                "{:<28} {:>6} {:>9.3} ± {:<6.3} {:>14.3} {:>5.1}/{:<6.1} {:>6}",
                s.spec.name,
                s.samples.len(),
                l.mean,
                l.stddev,
                s.resolve_time().mean,
                s.client_resolves_total() as f64 / n,
                s.server_resolves_total() as f64 / n,
                s.failures.len(),
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BenchOptions {
    /// Concurrent handshakes; 1 runs sequentially.
    pub workers: usize,
    /// Reproducible credential selection and randoms.
    pub seed: Option<[u8; 32]>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            seed: None,
        }
    }
}

fn one_run(world: &World, spec: &ScenarioSpec, run_seed: [u8; 32]) -> HandshakeRun {
    let mut rng = ChaCha20Rng::from_seed(run_seed);
    let (client, server) = world.configs(spec, &mut rng);
    run_handshake(&client, &server, spec.transport)
}

pub fn run_scenario(world: &World, spec: &ScenarioSpec, opts: &BenchOptions) -> ScenarioReport {
    let mut rng = match opts.seed {
        Some(s) => ChaCha20Rng::from_seed(s),
        None => ChaCha20Rng::from_seed(rand::random()),
    };
    let seeds: Vec<[u8; 32]> = (0..spec.repetitions).map(|_| rng.gen()).collect();
    let results: Vec<Mutex<Option<HandshakeRun>>> = seeds.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..opts.workers.clamp(1, spec.repetitions) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(seed) = seeds.get(i) else { break };
                let run = one_run(world, spec, *seed);
                *results[i].lock().expect("result slot") = Some(run);
            });
        }
    });
    let mut report = ScenarioReport {
        spec: spec.clone(),
        samples: Vec::new(),
        failures: Vec::new(),
    };
    for slot in results {
        let run = slot.into_inner().expect("result slot").expect("every run executed");
        match (&run.client, &run.server) {
            (Ok(c), Ok(s)) if run.secrets_agree() => {
                report.samples.push(RunSample::from_reports(c, s))
            }
            _ => report.failures.push(run.failure().unwrap_or(Alert::HandshakeFailure)),
        }
    }
    report
}

/// Runs every scenario; law violations are reported, not raised.
pub fn run_bench(world: &World, specs: &[ScenarioSpec], opts: &BenchOptions) -> BenchReport {
    BenchReport {
        scenarios: specs.iter().map(|s| run_scenario(world, s, opts)).collect(),
    }
}
