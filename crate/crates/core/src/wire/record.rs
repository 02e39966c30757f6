use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes256Gcm, Nonce};

use super::codec::Reader;
use super::{WireError, LEGACY_VERSION};

pub const MAX_PLAINTEXT: usize = 1 << 14;
/// Inner content type byte plus the 16-byte GCM tag, with TLS 1.3's
/// allowance for padding.
pub const MAX_CIPHERTEXT: usize = MAX_PLAINTEXT + 256;
pub const HEADER_LEN: usize = 5;
const TAG_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ContentType {
    Alert = 21,
    Handshake = 22,
    ApplicationData = 23,
}

impl ContentType {
    pub fn from_u8(v: u8) -> Result<Self, WireError> {
        match v {
            21 => Ok(Self::Alert),
            22 => Ok(Self::Handshake),
            23 => Ok(Self::ApplicationData),
            other => Err(WireError::UnknownContentType(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub content_type: ContentType,
    pub payload: Vec<u8>,
}

impl Record {
    pub fn new(content_type: ContentType, payload: Vec<u8>) -> Self {
        Self {
            content_type,
            payload,
        }
    }
}

/// Parsed 5-byte record header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordHeader {
    pub content_type: ContentType,
    pub length: usize,
}

pub fn parse_record_header(header: &[u8; HEADER_LEN]) -> Result<RecordHeader, WireError> {
    let mut r = Reader::new(header);
    let content_type = ContentType::from_u8(r.u8()?)?;
    if r.u16()? != LEGACY_VERSION {
        return Err(WireError::UnexpectedValue("record legacy_version"));
    }
    let length = r.u16()? as usize;
    if length > MAX_CIPHERTEXT {
        return Err(WireError::PayloadTooLarge(length));
    }
    Ok(RecordHeader {
        content_type,
        length,
    })
}

fn header(content_type: ContentType, len: usize) -> [u8; HEADER_LEN] {
    let [v0, v1] = LEGACY_VERSION.to_be_bytes();
    let [l0, l1] = (len as u16).to_be_bytes();
    [content_type as u8, v0, v1, l0, l1]
}

/// Frames an unprotected record (used for the hellos and early alerts).
pub fn encode_plaintext_record(rec: &Record) -> Result<Vec<u8>, WireError> {
    if rec.payload.len() > MAX_PLAINTEXT {
        return Err(WireError::PayloadTooLarge(rec.payload.len()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + rec.payload.len());
    out.extend_from_slice(&header(rec.content_type, rec.payload.len()));
    out.extend_from_slice(&rec.payload);
    Ok(out)
}

pub fn decode_plaintext_record(bytes: &[u8]) -> Result<Record, WireError> {
    let hdr: [u8; HEADER_LEN] = bytes
        .get(..HEADER_LEN)
        .ok_or(WireError::Truncated)?
        .try_into()
        .expect("slice length checked");
    let h = parse_record_header(&hdr)?;
    if h.length > MAX_PLAINTEXT {
        return Err(WireError::PayloadTooLarge(h.length));
    }
    let body = &bytes[HEADER_LEN..];
    if body.len() < h.length {
        return Err(WireError::Truncated);
    }
    if body.len() > h.length {
        return Err(WireError::TrailingBytes(body.len() - h.length));
    }
    Ok(Record::new(h.content_type, body.to_vec()))
}

/// One direction's AEAD state: key, static IV and the next sequence number.
#[derive(Clone)]
pub struct TrafficKeys {
    cipher: Aes256Gcm,
    iv: [u8; 12],
    seq: u64,
}

impl std::fmt::Debug for TrafficKeys {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrafficKeys").field("seq", &self.seq).finish_non_exhaustive()
    }
}

impl TrafficKeys {
    pub fn new(key: &[u8; 32], iv: [u8; 12]) -> Self {
        Self {
            cipher: Aes256Gcm::new(key.into()),
            iv,
            seq: 0,
        }
    }

    pub fn with_sequence(mut self, seq: u64) -> Self {
        self.seq = seq;
        self
    }

    pub fn sequence(&self) -> u64 {
        self.seq
    }

    fn nonce(&self) -> [u8; 12] {
        let mut nonce = self.iv;
        for (n, s) in nonce[4..].iter_mut().zip(self.seq.to_be_bytes()) {
            *n ^= s;
        }
        nonce
    }

    fn advance(&mut self) -> Result<[u8; 12], WireError> {
        if self.seq == u64::MAX {
            return Err(WireError::SequenceExhausted);
        }
        let nonce = self.nonce();
        self.seq += 1;
        Ok(nonce)
    }
}

/// Protects `rec` as a TLS 1.3 `TLSCiphertext`: the real content type rides
/// inside the encrypted payload and the header is the AEAD associated data.
pub fn seal_record(keys: &mut TrafficKeys, rec: &Record) -> Result<Vec<u8>, WireError> {
    if rec.payload.len() > MAX_PLAINTEXT {
        return Err(WireError::PayloadTooLarge(rec.payload.len()));
    }
    let mut inner = Vec::with_capacity(rec.payload.len() + 1);
    inner.extend_from_slice(&rec.payload);
    inner.push(rec.content_type as u8);
    let aad = header(ContentType::ApplicationData, inner.len() + TAG_LEN);
    let nonce = keys.advance()?;
    let ct = keys
        .cipher
        .encrypt(
            Nonce::from_slice(&nonce),
            Payload {
                msg: &inner,
                aad: &aad,
            },
        )
        .expect("AES-GCM encryption of bounded input cannot fail");
    let mut out = Vec::with_capacity(HEADER_LEN + ct.len());
    out.extend_from_slice(&aad);
    out.extend_from_slice(&ct);
    Ok(out)
}

pub fn open_record(keys: &mut TrafficKeys, bytes: &[u8]) -> Result<Record, WireError> {
    let hdr: [u8; HEADER_LEN] = bytes
        .get(..HEADER_LEN)
        .ok_or(WireError::Truncated)?
        .try_into()
        .expect("slice length checked");
    let h = parse_record_header(&hdr)?;
    if h.content_type != ContentType::ApplicationData {
        return Err(WireError::UnexpectedValue("protected record outer type"));
    }
    let body = &bytes[HEADER_LEN..];
    if body.len() != h.length {
        return Err(if body.len() < h.length {
            WireError::Truncated
        } else {
            WireError::TrailingBytes(body.len() - h.length)
        });
    }
    if body.len() < TAG_LEN + 1 {
        return Err(WireError::AuthTagMismatch);
    }
    let nonce = keys.advance()?;
    let mut inner = keys
        .cipher
        .decrypt(
            Nonce::from_slice(&nonce),
            Payload {
                msg: body,
                aad: &hdr,
            },
        )
        .map_err(|_| WireError::AuthTagMismatch)?;
    // Strip zero padding; the last non-zero byte is the real content type.
    let type_pos = inner
        .iter()
        .rposition(|&b| b != 0)
        .ok_or(WireError::UnexpectedValue("protected record has no content type"))?;
    let content_type = ContentType::from_u8(inner[type_pos])?;
    inner.truncate(type_pos);
    if inner.len() > MAX_PLAINTEXT {
        return Err(WireError::PayloadTooLarge(inner.len()));
    }
    Ok(Record::new(content_type, inner))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn keys() -> TrafficKeys {
        TrafficKeys::new(&[0x11; 32], [0x22; 12])
    }

    fn content_type() -> impl Strategy<Value = ContentType> {
        prop_oneof![
            Just(ContentType::Alert),
            Just(ContentType::Handshake),
            Just(ContentType::ApplicationData)
        ]
    }

    proptest! {
        #[test]
        fn seal_open_round_trip(ct in content_type(), payload in proptest::collection::vec(any::<u8>(), 0..2048), seq in 0u64..1_000_000) {
            let rec = Record::new(ct, payload);
            let mut tx = keys().with_sequence(seq);
            let mut rx = keys().with_sequence(seq);
            let sealed = seal_record(&mut tx, &rec).unwrap();
            prop_assert_eq!(open_record(&mut rx, &sealed).unwrap(), rec);
            prop_assert_eq!(tx.sequence(), seq + 1);
            prop_assert_eq!(rx.sequence(), seq + 1);
        }

        #[test]
        fn any_bit_flip_rejected(payload in proptest::collection::vec(any::<u8>(), 0..256), pos in any::<prop::sample::Index>(), bit in 0u8..8) {
            let rec = Record::new(ContentType::Handshake, payload);
            let mut sealed = seal_record(&mut keys(), &rec).unwrap();
            let i = pos.index(sealed.len());
            sealed[i] ^= 1 << bit;
            prop_assert!(open_record(&mut keys(), &sealed).is_err());
        }
    }

    #[test]
    fn max_payload_round_trips_and_oversize_rejected() {
        let rec = Record::new(ContentType::ApplicationData, vec![0xee; MAX_PLAINTEXT]);
        let sealed = seal_record(&mut keys(), &rec).unwrap();
        assert_eq!(open_record(&mut keys(), &sealed).unwrap(), rec);

        let big = Record::new(ContentType::ApplicationData, vec![0; MAX_PLAINTEXT + 1]);
        assert_eq!(
            seal_record(&mut keys(), &big),
            Err(WireError::PayloadTooLarge(MAX_PLAINTEXT + 1))
        );
    }

    #[test]
    fn tampered_ciphertext_is_auth_failure() {
        let rec = Record::new(ContentType::Handshake, b"hello".to_vec());
        let mut sealed = seal_record(&mut keys(), &rec).unwrap();
        sealed[HEADER_LEN + 2] ^= 0x01;
        assert_eq!(open_record(&mut keys(), &sealed), Err(WireError::AuthTagMismatch));
    }

    #[test]
    fn sequence_number_changes_ciphertext() {
        let rec = Record::new(ContentType::ApplicationData, b"same plaintext".to_vec());
        let mut k = keys();
        let c0 = seal_record(&mut k, &rec).unwrap();
        let c1 = seal_record(&mut k, &rec).unwrap();
        assert_ne!(c0, c1);
        assert_eq!(c0[..HEADER_LEN], c1[..HEADER_LEN]);
        // Opening out of order fails.
        let mut rx = keys();
        assert_eq!(open_record(&mut rx, &c1), Err(WireError::AuthTagMismatch));
    }

    #[test]
    fn nonce_is_iv_xor_sequence() {
        let k = TrafficKeys::new(&[0; 32], [0xff; 12]).with_sequence(0x0102);
        let n = k.nonce();
        assert_eq!(&n[..10], &[0xff; 10]);
        assert_eq!(n[10], 0xff ^ 0x01);
        assert_eq!(n[11], 0xff ^ 0x02);
    }

    #[test]
    fn exhausted_sequence() {
        let mut k = keys().with_sequence(u64::MAX);
        let rec = Record::new(ContentType::ApplicationData, vec![1]);
        assert_eq!(seal_record(&mut k, &rec), Err(WireError::SequenceExhausted));
    }

    #[test]
    fn plaintext_framing() {
        let rec = Record::new(ContentType::Handshake, vec![1, 2, 3]);
        let bytes = encode_plaintext_record(&rec).unwrap();
        assert_eq!(bytes, [22, 3, 3, 0, 3, 1, 2, 3]);
        assert_eq!(decode_plaintext_record(&bytes).unwrap(), rec);
        let mut bad = bytes.clone();
        bad[1] = 2;
        assert!(decode_plaintext_record(&bad).is_err());
        assert_eq!(decode_plaintext_record(&bytes[..6]), Err(WireError::Truncated));
    }
}
