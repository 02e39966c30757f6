use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::time::Duration;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{
    client_handshake, server_handshake, Alert, EndpointConfig, HandshakeError, NegotiationOutcome,
    PkObjectBytes, RecordLayer, Role, SessionSecrets, Stage, Transcript, DEFAULT_READ_TIMEOUT,
};
use crate::identity::{Did, PublicKey};
use crate::wire::{CertificateTypeCode, HandshakeType};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlightMetrics {
    /// Record-layer bytes written by this endpoint.
    pub bytes_sent: u64,
    pub bytes_received: u64,
    /// Identity objects this endpoint transmitted.
    pub pk_objects_sent: PkObjectBytes,
    pub pk_objects_received: PkObjectBytes,
    /// Resolves this endpoint sent to the registry.
    pub did_resolves: u64,
    pub resolve_time: Duration,
    pub wall_clock: Duration,
}

/// Who the peer proved to be.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeerIdentity {
    pub cert_type: CertificateTypeCode,
    pub public_key: PublicKey,
    /// Subject DID for VC peers.
    pub did: Option<Did>,
}

#[derive(Debug, Clone)]
pub struct EndpointReport {
    pub role: Role,
    pub secrets: SessionSecrets,
    pub negotiation: NegotiationOutcome,
    pub metrics: FlightMetrics,
    /// `None` for a client the server did not authenticate.
    pub peer: Option<PeerIdentity>,
    pub transcript: Transcript,
}

impl EndpointReport {
    pub fn message_sequence(&self) -> Vec<HandshakeType> {
        self.transcript.message_types()
    }
}

/// A completed handshake: application traffic keys are installed.
pub struct Established<S> {
    pub report: EndpointReport,
    layer: RecordLayer<S>,
}

impl<S: Read + Write> Established<S> {
    pub(crate) fn new(report: EndpointReport, layer: RecordLayer<S>) -> Self {
        Self { report, layer }
    }

    pub fn send(&mut self, data: &[u8]) -> Result<(), HandshakeError> {
        self.layer.send_application_data(data)
    }

    pub fn recv(&mut self) -> Result<Vec<u8>, HandshakeError> {
        let r = self.layer.recv_application_data();
        if let Err(HandshakeError::Local { alert, stage, .. }) = &r {
            self.layer.send_alert(*alert, *stage);
        }
        r
    }

    /// Client side of the echo check: send `payload`, expect it back.
    pub fn echo(&mut self, payload: &[u8]) -> Result<(), HandshakeError> {
        self.send(payload)?;
        let back = self.recv()?;
        if back != payload {
            return Err(HandshakeError::local(
                Alert::HandshakeFailure,
                Stage::ApplicationData,
                "echo mismatch",
            ));
        }
        Ok(())
    }

    /// Server side of the echo check.
    pub fn serve_echo(&mut self) -> Result<Vec<u8>, HandshakeError> {
        let data = self.recv()?;
        self.send(&data)?;
        Ok(data)
    }

    pub fn into_parts(self) -> (EndpointReport, S) {
        (self.report, self.layer.into_inner())
    }
}

pub(crate) fn endpoint_rng(cfg: &EndpointConfig) -> ChaCha20Rng {
    match cfg.rng_seed {
        Some(seed) => ChaCha20Rng::from_seed(seed),
        None => ChaCha20Rng::from_seed(rand::random()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportKind {
    Memory,
    Tcp,
}

impl std::str::FromStr for TransportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "memory" => Ok(Self::Memory),
            "tcp" => Ok(Self::Tcp),
            other => Err(format!("unknown transport `{other}`")),
        }
    }
}

impl std::fmt::Display for TransportKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Memory => "memory",
            Self::Tcp => "tcp",
        })
    }
}

/// Both endpoints' view of one handshake plus echo.
#[derive(Debug, Clone)]
pub struct HandshakeRun {
    pub client: Result<EndpointReport, HandshakeError>,
    pub server: Result<EndpointReport, HandshakeError>,
}

impl HandshakeRun {
    pub fn succeeded(&self) -> bool {
        self.client.is_ok() && self.server.is_ok()
    }

    /// The alert of a failed run, preferring the endpoint that raised it.
    pub fn failure(&self) -> Option<Alert> {
        match (&self.client, &self.server) {
            (Ok(_), Ok(_)) => None,
            (Err(e @ HandshakeError::Local { .. }), _) | (_, Err(e @ HandshakeError::Local { .. })) => {
                Some(e.alert())
            }
            (Err(e), _) | (_, Err(e)) => Some(e.alert()),
        }
    }

    /// Both endpoints failed and agree on the alert.
    pub fn consistent_failure(&self) -> bool {
        match (&self.client, &self.server) {
            (Err(c), Err(s)) => c.alert() == s.alert(),
            _ => false,
        }
    }

    pub fn secrets_agree(&self) -> bool {
        match (&self.client, &self.server) {
            (Ok(c), Ok(s)) => c.secrets == s.secrets,
            _ => false,
        }
    }
}

const ECHO_LEN: usize = 32;

/// Runs client and server over the given connected streams; the server runs
/// on its own thread.
pub fn run_handshake_over<C, S>(
    client: &EndpointConfig,
    server: &EndpointConfig,
    client_stream: C,
    server_stream: S,
) -> HandshakeRun
where
    C: Read + Write + Send,
    S: Read + Write + Send,
{
    std::thread::scope(|scope| {
        let server_side = scope.spawn(move || {
            let mut est = server_handshake(server, server_stream)?;
            est.serve_echo()?;
            Ok(est.into_parts().0)
        });
        let client_result = (|| {
            let mut est = client_handshake(client, client_stream)?;
            let mut payload = [0u8; ECHO_LEN];
            endpoint_rng(client).fill_bytes(&mut payload);
            est.echo(&payload)?;
            Ok(est.into_parts().0)
        })();
        let server_result = server_side.join().unwrap_or_else(|_| {
            Err(HandshakeError::Transport {
                stage: Stage::ClientHello,
                reason: "server thread panicked".into(),
            })
        });
        HandshakeRun {
            client: client_result,
            server: server_result,
        }
    })
}

pub fn run_handshake(
    client: &EndpointConfig,
    server: &EndpointConfig,
    transport: TransportKind,
) -> HandshakeRun {
    match transport {
        TransportKind::Memory => {
            let (c, s) = super::memory_pair();
            run_handshake_over(client, server, c, s)
        }
        TransportKind::Tcp => match tcp_pair() {
            Ok((c, s)) => run_handshake_over(client, server, c, s),
            Err(e) => {
                let err = HandshakeError::Transport {
                    stage: Stage::ClientHello,
                    reason: e.to_string(),
                };
                HandshakeRun {
                    client: Err(err.clone()),
                    server: Err(err),
                }
            }
        },
    }
}

/// A connected loopback TCP pair.
pub fn tcp_pair() -> std::io::Result<(TcpStream, TcpStream)> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let client = TcpStream::connect(listener.local_addr()?)?;
    let (server, _) = listener.accept()?;
    for s in [&client, &server] {
        s.set_nodelay(true)?;
        s.set_read_timeout(Some(DEFAULT_READ_TIMEOUT))?;
    }
    Ok((client, server))
}
