use std::io::{self, Read, Write};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

use super::{wire_alert, Alert, HandshakeError, Stage};
use crate::wire::{
    decode_message, encode_message, encode_plaintext_record, open_record, parse_record_header,
    seal_record, ContentType, HandshakeMessage, Record, TrafficKeys, WireError, HEADER_LEN,
    MAX_PLAINTEXT,
};

pub const DEFAULT_READ_TIMEOUT: Duration = Duration::from_secs(30);

/// One end of an in-memory, ordered, reliable byte pipe.
pub struct MemoryStream {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    pending: Vec<u8>,
    pos: usize,
    timeout: Duration,
}

/// Two connected in-memory endpoints.
pub fn memory_pair() -> (MemoryStream, MemoryStream) {
    memory_pair_with_timeout(DEFAULT_READ_TIMEOUT)
}

/// Like [`memory_pair`], but reads fail with `TimedOut` after `timeout`.
pub fn memory_pair_with_timeout(timeout: Duration) -> (MemoryStream, MemoryStream) {
    let (a_tx, b_rx) = mpsc::channel();
    let (b_tx, a_rx) = mpsc::channel();
    let end = |tx, rx| MemoryStream {
        tx,
        rx,
        pending: Vec::new(),
        pos: 0,
        timeout,
    };
    (end(a_tx, a_rx), end(b_tx, b_rx))
}

impl Read for MemoryStream {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if self.pos == self.pending.len() {
            match self.rx.recv_timeout(self.timeout) {
                Ok(chunk) => {
                    self.pending = chunk;
                    self.pos = 0;
                }
                Err(RecvTimeoutError::Disconnected) => return Ok(0),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(io::Error::new(io::ErrorKind::TimedOut, "peer went silent"))
                }
            }
        }
        let n = buf.len().min(self.pending.len() - self.pos);
        buf[..n].copy_from_slice(&self.pending[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

impl Write for MemoryStream {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.tx
            .send(buf.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "peer closed"))?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Wraps a stream and XORs `mask` into the byte at absolute write offset
/// `offset`, simulating an on-path modification.
pub struct FaultInjector<S> {
    inner: S,
    offset: usize,
    mask: u8,
    written: usize,
}

impl<S> FaultInjector<S> {
    pub fn new(inner: S, offset: usize, mask: u8) -> Self {
        Self {
            inner,
            offset,
            mask,
            written: 0,
        }
    }
}

impl<S: Read> Read for FaultInjector<S> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.inner.read(buf)
    }
}

impl<S: Write> Write for FaultInjector<S> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let start = self.written;
        if (start..start + buf.len()).contains(&self.offset) {
            let mut copy = buf.to_vec();
            copy[self.offset - start] ^= self.mask;
            self.inner.write_all(&copy)?;
        } else {
            self.inner.write_all(buf)?;
        }
        self.written += buf.len();
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Record framing and protection over a byte stream, plus byte counters.
pub struct RecordLayer<S> {
    stream: S,
    read_keys: Option<TrafficKeys>,
    write_keys: Option<TrafficKeys>,
    handshake_buf: Vec<u8>,
    bytes_sent: u64,
    bytes_received: u64,
}

impl<S: Read + Write> RecordLayer<S> {
    pub fn new(stream: S) -> Self {
        Self {
            stream,
            read_keys: None,
            write_keys: None,
            handshake_buf: Vec::new(),
            bytes_sent: 0,
            bytes_received: 0,
        }
    }

    pub fn bytes_sent(&self) -> u64 {
        self.bytes_sent
    }

    pub fn bytes_received(&self) -> u64 {
        self.bytes_received
    }

    pub fn set_read_keys(&mut self, keys: TrafficKeys) {
        self.read_keys = Some(keys);
    }

    pub fn set_write_keys(&mut self, keys: TrafficKeys) {
        self.write_keys = Some(keys);
    }

    pub fn into_inner(self) -> S {
        self.stream
    }

    fn send_record(&mut self, rec: &Record, stage: Stage) -> Result<(), HandshakeError> {
        let bytes = match self.write_keys.as_mut() {
            Some(k) => seal_record(k, rec),
            None => encode_plaintext_record(rec),
        }
        .map_err(|e| HandshakeError::local(Alert::HandshakeFailure, stage, e.to_string()))?;
        if let Err(e) = self.stream.write_all(&bytes).and_then(|_| self.stream.flush()) {
            return Err(self.pending_alert(stage).unwrap_or(HandshakeError::Transport {
                stage,
                reason: e.to_string(),
            }));
        }
        self.bytes_sent += bytes.len() as u64;
        Ok(())
    }

    /// After a failed write: the alert the peer sent before hanging up, if
    /// one is still waiting to be read.
    fn pending_alert(&mut self, stage: Stage) -> Option<HandshakeError> {
        loop {
            match self.recv_record(stage) {
                Ok(_) => continue,
                Err(e @ HandshakeError::Peer { .. }) => return Some(e),
                Err(_) => return None,
            }
        }
    }

    fn recv_record(&mut self, stage: Stage) -> Result<Record, HandshakeError> {
        let transport = |e: io::Error| HandshakeError::Transport {
            stage,
            reason: e.to_string(),
        };
        let mut hdr = [0u8; HEADER_LEN];
        self.stream.read_exact(&mut hdr).map_err(transport)?;
        let h = parse_record_header(&hdr)
            .map_err(|e| HandshakeError::local(Alert::DecodeError, stage, e.to_string()))?;
        let mut bytes = hdr.to_vec();
        bytes.resize(HEADER_LEN + h.length, 0);
        self.stream.read_exact(&mut bytes[HEADER_LEN..]).map_err(transport)?;
        self.bytes_received += bytes.len() as u64;
        let rec = match (h.content_type, self.read_keys.as_mut()) {
            // An endpoint that fails before it has keys can only alert in
            // the clear, so unprotected alerts are accepted at any point.
            (ContentType::Alert, _) | (_, None) => {
                Record::new(h.content_type, bytes[HEADER_LEN..].to_vec())
            }
            (_, Some(k)) => open_record(k, &bytes)
                .map_err(|e| HandshakeError::local(wire_alert(&e), stage, e.to_string()))?,
        };
        if rec.content_type == ContentType::Alert {
            let code = match rec.payload.as_slice() {
                [_level, code] => *code,
                _ => return Err(HandshakeError::local(Alert::DecodeError, stage, "malformed alert")),
            };
            return Err(HandshakeError::Peer {
                alert: Alert::from_code(code),
                stage,
            });
        }
        Ok(rec)
    }

    /// Sends one handshake message, fragmenting across records if needed.
    pub fn send_handshake(&mut self, encoded: &[u8], stage: Stage) -> Result<(), HandshakeError> {
        for chunk in encoded.chunks(MAX_PLAINTEXT) {
            self.send_record(&Record::new(ContentType::Handshake, chunk.to_vec()), stage)?;
        }
        Ok(())
    }

    /// Receives one handshake message; returns its encoding and parse.
    pub fn recv_handshake(
        &mut self,
        stage: Stage,
    ) -> Result<(Vec<u8>, HandshakeMessage), HandshakeError> {
        loop {
            if self.handshake_buf.len() >= 4 {
                let len = u32::from_be_bytes([
                    0,
                    self.handshake_buf[1],
                    self.handshake_buf[2],
                    self.handshake_buf[3],
                ]) as usize;
                if self.handshake_buf.len() >= 4 + len {
                    let encoded: Vec<u8> = self.handshake_buf.drain(..4 + len).collect();
                    let msg = decode_message(&encoded)
                        .map_err(|e| HandshakeError::local(wire_alert(&e), stage, e.to_string()))?;
                    return Ok((encoded, msg));
                }
            }
            let rec = self.recv_record(stage)?;
            if rec.content_type != ContentType::Handshake {
                return Err(HandshakeError::local(
                    Alert::DecodeError,
                    stage,
                    "expected a handshake record",
                ));
            }
            if rec.payload.is_empty() {
                return Err(HandshakeError::local(Alert::DecodeError, stage, "empty handshake record"));
            }
            self.handshake_buf.extend_from_slice(&rec.payload);
        }
    }

    /// Best effort: the connection is being torn down anyway.
    pub fn send_alert(&mut self, alert: Alert, stage: Stage) {
        let _ = self.send_record(&Record::new(ContentType::Alert, vec![2, alert.code()]), stage);
    }

    pub fn send_application_data(&mut self, data: &[u8]) -> Result<(), HandshakeError> {
        for chunk in data.chunks(MAX_PLAINTEXT) {
            self.send_record(
                &Record::new(ContentType::ApplicationData, chunk.to_vec()),
                Stage::ApplicationData,
            )?;
        }
        Ok(())
    }

    pub fn recv_application_data(&mut self) -> Result<Vec<u8>, HandshakeError> {
        let rec = self.recv_record(Stage::ApplicationData)?;
        if rec.content_type != ContentType::ApplicationData {
            return Err(HandshakeError::local(
                Alert::DecodeError,
                Stage::ApplicationData,
                "expected application data",
            ));
        }
        Ok(rec.payload)
    }
}

/// Encodes a message we built ourselves.
pub(crate) fn encode_own(msg: &HandshakeMessage, stage: Stage) -> Result<Vec<u8>, HandshakeError> {
    encode_message(msg).map_err(|e: WireError| {
        HandshakeError::local(Alert::HandshakeFailure, stage, format!("encoding own message: {e}"))
    })
}
