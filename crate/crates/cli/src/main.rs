//! `ssitls`: identities, credentials, a registry service, handshake
//! endpoints, benchmarks and the resolver attack demonstration.

mod endpoint;
mod error;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use chrono::Utc;
use clap::{Parser, Subcommand};
use serde_json::Value;
use ssitls_core::handshake::{
    client_handshake, server_handshake, CredentialKind, EndpointConfig, DEFAULT_READ_TIMEOUT,
};
use ssitls_core::harness::{
    exit, parse_kind, parse_scenarios, run_attack, run_bench, BenchOptions, World, WorldOptions,
    DEFAULT_POOL_SIZE, REGISTRY_ENV,
};
use ssitls_core::identity::{
    generate_identity, issue_vc, make_chain, parse_timestamp, read_key, save_chain_bundle,
    write_key, write_new, encode_pem, Did, IdentityBundle, IdentityError, IdentityKeyPair, Validity,
};
use ssitls_core::registry::{serve_http, ChannelMode, HttpResolver, Ledger, RegistryError};
use ssitls_core::wire::DidMethodRegistry;

use endpoint::{parse_public_key, print_report, EndpointArgs};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ssitls", version, about)]
struct Cli {
    /// Registry base URL, e.g. http://127.0.0.1:8600.
    #[arg(long, global = true, env = REGISTRY_ENV)]
    registry: Option<String>,
    /// DID method table (`code = name` lines) replacing the built-in one.
    #[arg(long, global = true)]
    method_table: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a key pair, DID and DID Document and register the document.
    Genid {
        #[arg(long, default_value = "iota")]
        method: String,
        #[arg(long)]
        out: PathBuf,
        /// Hex seed for a reproducible key.
        #[arg(long)]
        seed: Option<String>,
        /// Only write the bundle.
        #[arg(long)]
        no_register: bool,
    },
    /// Issue a VC about a subject DID from a JSON claims file.
    Issue {
        /// Issuer bundle directory.
        #[arg(long)]
        issuer: PathBuf,
        #[arg(long)]
        subject: Did,
        #[arg(long)]
        claims: PathBuf,
        /// Start of validity (RFC 3339); defaults to now.
        #[arg(long)]
        not_before: Option<String>,
        #[arg(long, default_value_t = 365)]
        days: i64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a root, intermediate and leaf certificate chain.
    Genchain {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, num_args = 3, default_values = ["Root CA", "Intermediate CA", "leaf"])]
        names: Vec<String>,
        #[arg(long, default_value_t = 365)]
        days: i64,
        #[arg(long)]
        seed: Option<String>,
    },
    /// Run the registry HTTP service.
    ServeRegistry {
        #[arg(long, default_value = "127.0.0.1:8600")]
        bind: String,
        #[arg(long, default_value = "plain")]
        mode: ChannelMode,
        /// Registry signing key file; created if missing.
        #[arg(long)]
        key: Option<PathBuf>,
    },
    /// Accept one connection, run the handshake and echo one message.
    Server {
        #[arg(long, default_value = "127.0.0.1:4433")]
        listen: String,
        #[arg(long)]
        request_client_auth: bool,
        #[command(flatten)]
        endpoint: EndpointArgs,
    },
    /// Connect, run the handshake and check an encrypted echo.
    Client {
        #[arg(long, default_value = "127.0.0.1:4433")]
        connect: String,
        #[arg(long, default_value = "hello")]
        message: String,
        #[command(flatten)]
        endpoint: EndpointArgs,
    },
    /// Run benchmark scenarios and check the resolve and accounting laws.
    Bench {
        #[arg(long)]
        scenarios: PathBuf,
        /// Write one JSON record per scenario here.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = DEFAULT_POOL_SIZE)]
        pool_size: usize,
        /// Override every scenario's repetitions.
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        registry_pk: Option<String>,
    },
    /// Impersonate a registered identity by forging its DID Document in transit.
    Attack {
        #[arg(long, default_value = "plain")]
        mode: ChannelMode,
        #[arg(long, value_parser = parse_kind, default_value = "vc")]
        server_cred: CredentialKind,
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        registry_pk: Option<String>,
    },
}

fn seed32(hex_seed: Option<&str>) -> Result<Option<[u8; 32]>, CliError> {
    hex_seed
        .map(|s| {
            let b = hex::decode(s).map_err(|e| CliError::Usage(format!("seed: {e}")))?;
            let mut out = [0u8; 32];
            if b.is_empty() || b.len() > 32 {
                return Err(CliError::Usage("seed must be 1 to 32 hex bytes".into()));
            }
            out[..b.len()].copy_from_slice(&b);
            Ok(out)
        })
        .transpose()
}

fn method_table(path: Option<&Path>) -> Result<DidMethodRegistry, CliError> {
    match path {
        None => Ok(DidMethodRegistry::default()),
        Some(p) => DidMethodRegistry::parse(&fs::read_to_string(p)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))),
    }
}

fn read_claims(path: &Path) -> Result<BTreeMap<String, Value>, CliError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Claims {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        reason: e.to_string(),
    })
}

/// Registers `world`'s documents with a remote registry and resolves
/// through it.
fn remote_world(world: World, url: &str, registry_pk: Option<&str>) -> Result<World, CliError> {
    let remote = HttpResolver::new(url);
    for doc in world.documents() {
        match remote.create(doc) {
            Ok(_) | Err(RegistryError::AlreadyExists(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let pk = match registry_pk {
        Some(k) => parse_public_key(k)?,
        None => world.registry_pk,
    };
    Ok(world.with_remote(Arc::new(remote), pk))
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let table = method_table(cli.method_table.as_deref())?;
    let registry = cli.registry.as_deref();
    match cli.command {
        Command::Genid {
            method,
            out,
            seed,
            no_register,
        } => {
            let seed = seed32(seed.as_deref())?;
            let identity = generate_identity(&method, seed.as_ref().map(|s| &s[..]), &table)?;
            IdentityBundle {
                identity: identity.clone(),
                vc: None,
            }
            .save(&out)?;
            println!("{}", identity.did);
            match (registry, no_register) {
                (_, true) => {}
                (Some(url), false) => {
                    HttpResolver::new(url).create(&identity.document)?;
                    eprintln!("registered with {url}");
                }
                (None, false) => eprintln!("no registry configured (--registry or {REGISTRY_ENV}); not registered"),
            }
        }
        Command::Issue {
            issuer,
            subject,
            claims,
            not_before,
            days,
            out,
        } => {
            let issuer = IdentityBundle::load(&issuer)?.identity;
            let claims = read_claims(&claims)?;
            let now = Utc::now();
            let start = match not_before {
                Some(s) => parse_timestamp(&s)?,
                None => now,
            };
            let validity = Validity::days_from(start, days);
            if validity.not_after <= now {
                return Err(IdentityError::InvalidValidityWindow.into());
            }
            let vc = issue_vc(&issuer, &subject, claims, validity)?;
            write_new(&out, encode_pem(&vc).as_bytes())?;
            println!("{}", vc.id);
        }
        Command::Genchain {
            out,
            names,
            days,
            seed,
        } => {
            let seed = seed32(seed.as_deref())?;
            let validity = Validity::days_from(Utc::now(), days);
            let bundle = make_chain(
                [&names[0], &names[1], &names[2]],
                validity,
                seed.as_ref().map(|s| &s[..]),
            )?;
            save_chain_bundle(&out, &bundle)?;
            println!("{}", hex::encode(bundle.leaf_key.public_key().as_bytes()));
        }
        Command::ServeRegistry { bind, mode, key } => {
            let signer = match (mode, key) {
                (ChannelMode::Plain, _) => None,
                (ChannelMode::Authenticated, None) => {
                    return Err(CliError::Usage("authenticated mode needs --key".into()))
                }
                (ChannelMode::Authenticated, Some(path)) if path.exists() => Some(read_key(&path)?),
                (ChannelMode::Authenticated, Some(path)) => {
                    let k = IdentityKeyPair::generate();
                    write_key(&path, &k)?;
                    Some(k)
                }
            };
            let pk = signer.as_ref().map(|k| hex::encode(k.public_key().as_bytes()));
            let server = serve_http(Arc::new(Ledger::new()), &bind, signer)?;
            println!("registry listening on {}", server.base_url());
            if let Some(pk) = pk {
                println!("registry public key {pk}");
            }
            std::io::stdout().flush()?;
            server.join();
        }
        Command::Server {
            listen,
            request_client_auth,
            endpoint,
        } => {
            let mut cfg = EndpointConfig::server();
            cfg.request_client_auth = request_client_auth;
            let cfg = endpoint.configure(cfg, registry, &table)?;
            let listener = TcpListener::bind(&listen)?;
            println!("listening on {}", listener.local_addr()?);
            std::io::stdout().flush()?;
            let (stream, _) = listener.accept()?;
            stream.set_read_timeout(Some(DEFAULT_READ_TIMEOUT))?;
            let mut est = server_handshake(&cfg, stream)?;
            let echoed = est.serve_echo()?;
            print_report(&cfg, &est.report);
            println!("echoed          {} bytes", echoed.len());
        }
        Command::Client {
            connect,
            message,
            endpoint,
        } => {
            let cfg = endpoint.configure(EndpointConfig::client(), registry, &table)?;
            let stream = TcpStream::connect(&connect)?;
            stream.set_read_timeout(Some(DEFAULT_READ_TIMEOUT))?;
            let mut est = client_handshake(&cfg, stream)?;
            est.echo(message.as_bytes())?;
            print_report(&cfg, &est.report);
            println!("echo            ok");
        }
        Command::Bench {
            scenarios,
            records,
            workers,
            pool_size,
            repetitions,
            seed,
            registry_pk,
        } => {
            let mut specs = parse_scenarios(&fs::read_to_string(&scenarios)?)?;
            if let Some(r) = repetitions {
                if r == 0 {
                    return Err(CliError::Usage("--repetitions must be at least 1".into()));
                }
                specs.iter_mut().for_each(|s| s.repetitions = r);
            }
            let seed = seed32(seed.as_deref())?;
            let mut world = World::generate(&WorldOptions {
                pool_size: pool_size.max(1),
                seed,
                ..Default::default()
            })?;
            if let Some(url) = registry {
                world = remote_world(world, url, registry_pk.as_deref())?;
            }
            let report = run_bench(&world, &specs, &BenchOptions { workers, seed });
            print!("{}", report.render_table());
            if let Some(path) = records {
                fs::write(&path, report.to_json_lines())?;
            }
            report.check_laws()?;
            println!("all laws hold");
        }
        Command::Attack {
            mode,
            server_cred,
            seed,
            registry_pk,
        } => {
            let seed = seed32(seed.as_deref())?;
            let mut world = World::generate(&WorldOptions {
                pool_size: 2,
                seed,
                ..Default::default()
            })?;
            if let Some(url) = registry {
                world = remote_world(world, url, registry_pk.as_deref())?;
            }
            let report = run_attack(&world, mode, server_cred, seed.unwrap_or([0xa7; 32]))?;
            for line in &report.transcript {
                println!("{line}");
            }
            let code = report.outcome()?;
            match mode {
                ChannelMode::Plain => println!("attack succeeded: the attacker's key was accepted"),
                ChannelMode::Authenticated => println!("defense held: the forged document was rejected"),
            }
            return Ok(code);
        }
    }
    Ok(exit::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            match &e {
                CliError::Harness(ssitls_core::harness::HarnessError::Handshake(h)) => {
                    eprintln!("error: {e}");
                    eprintln!("alert: {}", h.alert().name());
                }
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
