//! HTTP front for the ledger.
//!
//! ```text
//! GET  /resolve/{method}/{id}   X-Request-Id: <32 hex>
//!   200  body = DID Document serialization
//!        X-Registry-Version: <n>
//!        X-Registry-Signature: <128 hex>   (authenticated registries only)
//!   404  unknown DID      410  deactivated DID
//! POST /create                  body = DER-encoded DID Document
//!   201  created          409  already exists
//! ```

use std::io::Read;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use tiny_http::{Header, Method, Request, Response, Server};

use super::{
    Ledger, LedgerService, RegistryError, RegistryResponse, RequestId, ResolverBackend,
};
use crate::identity::{decode_der, encode_der, Did, DidDocument, IdentityKeyPair};

pub const REQUEST_ID_HEADER: &str = "X-Request-Id";
pub const SIGNATURE_HEADER: &str = "X-Registry-Signature";
pub const VERSION_HEADER: &str = "X-Registry-Version";

const WORKERS: usize = 4;

/// A running registry HTTP service; stops when dropped.
pub struct RegistryServer {
    server: Arc<Server>,
    addr: SocketAddr,
    workers: Vec<JoinHandle<()>>,
}

impl RegistryServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the service stops.
    pub fn join(mut self) {
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }

    pub fn shutdown(self) {
        drop(self);
    }
}

impl Drop for RegistryServer {
    fn drop(&mut self) {
        for _ in 0..self.workers.len() {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

/// Starts serving `ledger` on `bind`. With `signer` the service runs in
/// authenticated mode and signs every resolve response.
pub fn serve_http(
    ledger: Arc<Ledger>,
    bind: &str,
    signer: Option<IdentityKeyPair>,
) -> Result<RegistryServer, RegistryError> {
    let server = Server::http(bind).map_err(|e| RegistryError::Transport(e.to_string()))?;
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| RegistryError::Transport("not an IP listener".into()))?;
    let server = Arc::new(server);
    let service = Arc::new(LedgerService::new(ledger, signer));
    let workers = (0..WORKERS)
        .map(|_| {
            let server = server.clone();
            let service = service.clone();
            std::thread::spawn(move || {
                while let Ok(req) = server.recv() {
                    handle(&service, req);
                }
            })
        })
        .collect();
    Ok(RegistryServer {
        server,
        addr,
        workers,
    })
}

fn header(name: &str, value: &str) -> Header {
    Header::from_bytes(name.as_bytes(), value.as_bytes()).expect("ASCII header")
}

fn text(status: u16, msg: &str) -> Response<std::io::Cursor<Vec<u8>>> {
    Response::from_string(msg).with_status_code(status)
}

fn error_status(e: &RegistryError) -> u16 {
    match e {
        RegistryError::NotFound(_) => 404,
        RegistryError::Deactivated(_) => 410,
        RegistryError::AlreadyExists(_) => 409,
        RegistryError::InvalidDocument(_) => 400,
        _ => 500,
    }
}

fn handle(service: &LedgerService, mut req: Request) {
    let url = req.url().to_string();
    let response = match (req.method(), url.strip_prefix("/resolve/")) {
        (Method::Get, Some(path)) => resolve_route(service, &req, path),
        (Method::Post, None) if url == "/create" => {
            let mut body = Vec::new();
            match req.as_reader().read_to_end(&mut body) {
                Ok(_) => create_route(service, &body),
                Err(e) => text(400, &e.to_string()),
            }
        }
        _ => text(404, "no such route"),
    };
    let _ = req.respond(response);
}

fn resolve_route(
    service: &LedgerService,
    req: &Request,
    path: &str,
) -> Response<std::io::Cursor<Vec<u8>>> {
    let Some((method, id)) = path.split_once('/') else {
        return text(400, "expected /resolve/{method}/{id}");
    };
    let Ok(did) = Did::new(method, id) else {
        return text(400, "malformed DID");
    };
    let request_id = req
        .headers()
        .iter()
        .find(|h| h.field.equiv(REQUEST_ID_HEADER))
        .and_then(|h| hex::decode(h.value.as_str()).ok())
        .and_then(|b| RequestId::try_from(b).ok());
    let Some(request_id) = request_id else {
        return text(400, "missing or malformed X-Request-Id");
    };
    match service.fetch(&did, &request_id) {
        Ok(resp) => {
            let mut out = Response::from_data(resp.body)
                .with_status_code(200)
                .with_header(header("Content-Type", "application/json"))
                .with_header(header(VERSION_HEADER, &resp.version.to_string()));
            if let Some(sig) = resp.signature {
                out = out.with_header(header(SIGNATURE_HEADER, &hex::encode(sig)));
            }
            out
        }
        Err(e) => text(error_status(&e), &e.to_string()),
    }
}

fn create_route(service: &LedgerService, body: &[u8]) -> Response<std::io::Cursor<Vec<u8>>> {
    let doc: DidDocument = match decode_der(body) {
        Ok(d) => d,
        Err(e) => return text(400, &e.to_string()),
    };
    match service.ledger().create(doc) {
        Ok(did) => text(201, &did.to_string()),
        Err(e) => text(error_status(&e), &e.to_string()),
    }
}

/// Resolver backend talking to a [`serve_http`] service.
pub struct HttpResolver {
    base_url: String,
    agent: ureq::Agent,
}

impl HttpResolver {
    pub fn new(base_url: &str) -> Self {
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            agent: ureq::AgentBuilder::new()
                .timeout(Duration::from_secs(10))
                .build(),
        }
    }

    /// Registers a DID Document with the remote ledger.
    pub fn create(&self, doc: &DidDocument) -> Result<Did, RegistryError> {
        let url = format!("{}/create", self.base_url);
        match self.agent.post(&url).send_bytes(&encode_der(doc)) {
            Ok(_) => Ok(doc.id.clone()),
            Err(ureq::Error::Status(409, _)) => Err(RegistryError::AlreadyExists(doc.id.to_string())),
            Err(ureq::Error::Status(code, r)) => Err(RegistryError::Transport(format!(
                "HTTP {code}: {}",
                r.into_string().unwrap_or_default()
            ))),
            Err(e) => Err(RegistryError::Transport(e.to_string())),
        }
    }
}

impl ResolverBackend for HttpResolver {
    fn fetch(&self, did: &Did, request_id: &RequestId) -> Result<RegistryResponse, RegistryError> {
        let url = format!(
            "{}/resolve/{}/{}",
            self.base_url,
            did.method(),
            did.method_specific_id()
        );
        let resp = match self
            .agent
            .get(&url)
            .set(REQUEST_ID_HEADER, &hex::encode(request_id))
            .call()
        {
            Ok(r) => r,
            Err(ureq::Error::Status(404, _)) => return Err(RegistryError::NotFound(did.to_string())),
            Err(ureq::Error::Status(410, _)) => return Err(RegistryError::Deactivated(did.to_string())),
            Err(ureq::Error::Status(code, _)) => {
                return Err(RegistryError::Transport(format!("HTTP {code}")))
            }
            Err(e) => return Err(RegistryError::Transport(e.to_string())),
        };
        let version = resp
            .header(VERSION_HEADER)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| RegistryError::InvalidResponse("missing version header".into()))?;
        // A malformed signature header is treated like a missing one.
        let signature = resp
            .header(SIGNATURE_HEADER)
            .and_then(|s| hex::decode(s).ok())
            .and_then(|b| <[u8; 64]>::try_from(b).ok());
        let mut body = Vec::new();
        resp.into_reader()
            .take(1 << 20)
            .read_to_end(&mut body)
            .map_err(|e| RegistryError::Transport(e.to_string()))?;
        Ok(RegistryResponse {
            body,
            version,
            signature,
        })
    }
}
