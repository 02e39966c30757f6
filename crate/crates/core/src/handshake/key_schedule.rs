//! TLS 1.3 key schedule instantiated with HKDF-SHA-384.

use hkdf::Hkdf;
use hmac::{Hmac, Mac};
use sha2::{Digest, Sha384};

use crate::wire::{HandshakeType, TrafficKeys};

pub const HASH_LEN: usize = 48;
pub type Secret = [u8; HASH_LEN];

type HmacSha384 = Hmac<Sha384>;

pub fn hkdf_extract(salt: &[u8], ikm: &[u8]) -> Secret {
    let (prk, _) = Hkdf::<Sha384>::extract(Some(salt), ikm);
    prk.into()
}

/// `HKDF-Expand-Label(secret, label, context, len)` with the `"tls13 "`
/// label prefix.
pub fn hkdf_expand_label(secret: &[u8], label: &str, context: &[u8], len: usize) -> Vec<u8> {
    let full_label = [b"tls13 ".as_slice(), label.as_bytes()].concat();
    let mut info = Vec::with_capacity(4 + full_label.len() + context.len());
    info.extend_from_slice(&(len as u16).to_be_bytes());
    info.push(full_label.len() as u8);
    info.extend_from_slice(&full_label);
    info.push(context.len() as u8);
    info.extend_from_slice(context);
    let hk = Hkdf::<Sha384>::from_prk(secret).expect("secret is one hash length");
    let mut out = vec![0u8; len];
    hk.expand(&info, &mut out).expect("output length within HKDF bounds");
    out
}

pub fn derive_secret(secret: &[u8], label: &str, transcript_hash: &[u8]) -> Secret {
    hkdf_expand_label(secret, label, transcript_hash, HASH_LEN)
        .try_into()
        .expect("requested one hash length")
}

pub fn empty_hash() -> Secret {
    Sha384::digest([]).into()
}

/// Running SHA-384 over the encoded handshake messages, plus a copy of the
/// messages themselves.
#[derive(Debug, Clone, Default)]
pub struct Transcript {
    hash: Sha384,
    messages: Vec<(HandshakeType, Vec<u8>)>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, msg_type: HandshakeType, encoded: &[u8]) {
        self.hash.update(encoded);
        self.messages.push((msg_type, encoded.to_vec()));
    }

    pub fn current_hash(&self) -> Secret {
        self.hash.clone().finalize().into()
    }

    pub fn message_types(&self) -> Vec<HandshakeType> {
        self.messages.iter().map(|(t, _)| *t).collect()
    }

    pub fn messages(&self) -> &[(HandshakeType, Vec<u8>)] {
        &self.messages
    }
}

/// Secrets available once the hellos are exchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandshakeSecrets {
    pub shared_secret: [u8; 32],
    pub early_secret: Secret,
    pub handshake_secret: Secret,
    pub client_handshake_traffic: Secret,
    pub server_handshake_traffic: Secret,
    pub client_finished_key: Secret,
    pub server_finished_key: Secret,
}

impl HandshakeSecrets {
    /// `hello_hash` covers ClientHello..ServerHello.
    pub fn derive(shared_secret: [u8; 32], hello_hash: &[u8]) -> Self {
        let zeros = [0u8; HASH_LEN];
        let early_secret = hkdf_extract(&[0], &zeros);
        let derived = derive_secret(&early_secret, "derived", &empty_hash());
        let handshake_secret = hkdf_extract(&derived, &shared_secret);
        let client_handshake_traffic = derive_secret(&handshake_secret, "c hs traffic", hello_hash);
        let server_handshake_traffic = derive_secret(&handshake_secret, "s hs traffic", hello_hash);
        Self {
            shared_secret,
            early_secret,
            handshake_secret,
            client_finished_key: finished_key(&client_handshake_traffic),
            server_finished_key: finished_key(&server_handshake_traffic),
            client_handshake_traffic,
            server_handshake_traffic,
        }
    }

    /// `server_finished_hash` covers ClientHello..server Finished.
    pub fn into_session(self, server_finished_hash: &[u8]) -> SessionSecrets {
        let derived = derive_secret(&self.handshake_secret, "derived", &empty_hash());
        let master_secret = hkdf_extract(&derived, &[0u8; HASH_LEN]);
        SessionSecrets {
            client_application_traffic: derive_secret(
                &master_secret,
                "c ap traffic",
                server_finished_hash,
            ),
            server_application_traffic: derive_secret(
                &master_secret,
                "s ap traffic",
                server_finished_hash,
            ),
            master_secret,
            handshake: self,
        }
    }
}

/// Every secret of a completed handshake.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionSecrets {
    pub handshake: HandshakeSecrets,
    pub master_secret: Secret,
    pub client_application_traffic: Secret,
    pub server_application_traffic: Secret,
}

/// Transcript hashes the schedule consumes.
#[derive(Debug, Clone, Copy)]
pub struct TranscriptSnapshots<'a> {
    pub hello: &'a [u8],
    pub server_finished: &'a [u8],
}

pub fn key_schedule(shared_secret: [u8; 32], snapshots: TranscriptSnapshots<'_>) -> SessionSecrets {
    HandshakeSecrets::derive(shared_secret, snapshots.hello).into_session(snapshots.server_finished)
}

pub fn finished_key(traffic_secret: &[u8]) -> Secret {
    hkdf_expand_label(traffic_secret, "finished", &[], HASH_LEN)
        .try_into()
        .expect("requested one hash length")
}

pub fn traffic_keys(traffic_secret: &[u8]) -> TrafficKeys {
    let key: [u8; 32] = hkdf_expand_label(traffic_secret, "key", &[], 32)
        .try_into()
        .expect("32 bytes");
    let iv: [u8; 12] = hkdf_expand_label(traffic_secret, "iv", &[], 12)
        .try_into()
        .expect("12 bytes");
    TrafficKeys::new(&key, iv)
}

/// `verify_data` for a Finished message.
pub fn finished_mac(finished_key: &[u8], transcript_hash: &[u8]) -> Secret {
    let mut mac = HmacSha384::new_from_slice(finished_key).expect("HMAC accepts any key length");
    mac.update(transcript_hash);
    mac.finalize().into_bytes().into()
}

/// Constant-time check of a received `verify_data`; wrong lengths fail.
pub fn verify_finished(finished_key: &[u8], transcript_hash: &[u8], verify_data: &[u8]) -> bool {
    let mut mac = HmacSha384::new_from_slice(finished_key).expect("HMAC accepts any key length");
    mac.update(transcript_hash);
    mac.verify_slice(verify_data).is_ok() && verify_data.len() == HASH_LEN
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_transcript_sensitive() {
        let a = key_schedule(
            [7; 32],
            TranscriptSnapshots {
                hello: &[1; 48],
                server_finished: &[2; 48],
            },
        );
        let b = key_schedule(
            [7; 32],
            TranscriptSnapshots {
                hello: &[1; 48],
                server_finished: &[2; 48],
            },
        );
        assert_eq!(a, b);

        let mut changed_hello = [1u8; 48];
        changed_hello[0] = 0;
        let c = key_schedule(
            [7; 32],
            TranscriptSnapshots {
                hello: &changed_hello,
                server_finished: &[2; 48],
            },
        );
        assert_eq!(c.handshake.handshake_secret, a.handshake.handshake_secret);
        assert_ne!(c.handshake.client_handshake_traffic, a.handshake.client_handshake_traffic);
        assert_ne!(c.handshake.server_handshake_traffic, a.handshake.server_handshake_traffic);
        assert_ne!(c.handshake.client_finished_key, a.handshake.client_finished_key);
        // Application secrets depend only on the later snapshot.
        assert_eq!(c.client_application_traffic, a.client_application_traffic);
    }

    #[test]
    fn finished_verification() {
        let key = [3u8; 48];
        let hash = [4u8; 48];
        let mac = finished_mac(&key, &hash);
        assert!(verify_finished(&key, &hash, &mac));
        assert!(!verify_finished(&key, &hash, &mac[..47]));
        let mut bad = mac;
        bad[10] ^= 1;
        assert!(!verify_finished(&key, &hash, &bad));
    }

    #[test]
    fn transcript_records_order() {
        let mut t = Transcript::new();
        t.add(HandshakeType::ClientHello, b"a");
        t.add(HandshakeType::ServerHello, b"b");
        let direct: Secret = Sha384::digest(b"ab").into();
        assert_eq!(t.current_hash(), direct);
        assert_eq!(
            t.message_types(),
            [HandshakeType::ClientHello, HandshakeType::ServerHello]
        );
    }
}
