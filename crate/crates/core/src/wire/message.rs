use super::codec::{Reader, Writer};
use super::extension::{decode_extensions, encode_extensions, find_extension, ExtensionType};
use super::{Extension, WireError, LEGACY_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum HandshakeType {
    ClientHello = 1,
    ServerHello = 2,
    EncryptedExtensions = 8,
    Certificate = 11,
    CertificateRequest = 13,
    CertificateVerify = 15,
    Finished = 20,
}

impl HandshakeType {
    pub fn from_u8(v: u8) -> Result<Self, WireError> {
        Ok(match v {
            1 => Self::ClientHello,
            2 => Self::ServerHello,
            8 => Self::EncryptedExtensions,
            11 => Self::Certificate,
            13 => Self::CertificateRequest,
            15 => Self::CertificateVerify,
            20 => Self::Finished,
            other => return Err(WireError::UnknownMessageType(other)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientHello {
    pub random: [u8; 32],
    pub legacy_session_id: Vec<u8>,
    pub cipher_suites: Vec<u16>,
    pub extensions: Vec<Extension>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerHello {
    pub random: [u8; 32],
    pub legacy_session_id_echo: Vec<u8>,
    pub cipher_suite: u16,
    pub extensions: Vec<Extension>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedExtensions {
    pub extensions: Vec<Extension>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateRequest {
    pub context: Vec<u8>,
    pub extensions: Vec<Extension>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateEntry {
    pub cert_data: Vec<u8>,
    pub extensions: Vec<Extension>,
}

impl CertificateEntry {
    pub fn new(cert_data: Vec<u8>) -> Self {
        Self {
            cert_data,
            extensions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub context: Vec<u8>,
    pub entries: Vec<CertificateEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateVerify {
    pub scheme: u16,
    pub signature: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finished {
    pub verify_data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HandshakeMessage {
    ClientHello(ClientHello),
    ServerHello(ServerHello),
    EncryptedExtensions(EncryptedExtensions),
    CertificateRequest(CertificateRequest),
    Certificate(Certificate),
    CertificateVerify(CertificateVerify),
    Finished(Finished),
}

impl HandshakeMessage {
    pub fn msg_type(&self) -> HandshakeType {
        match self {
            Self::ClientHello(_) => HandshakeType::ClientHello,
            Self::ServerHello(_) => HandshakeType::ServerHello,
            Self::EncryptedExtensions(_) => HandshakeType::EncryptedExtensions,
            Self::CertificateRequest(_) => HandshakeType::CertificateRequest,
            Self::Certificate(_) => HandshakeType::Certificate,
            Self::CertificateVerify(_) => HandshakeType::CertificateVerify,
            Self::Finished(_) => HandshakeType::Finished,
        }
    }
}

const CLIENT_HELLO_MANDATORY: [u16; 3] = [
    ExtensionType::SUPPORTED_VERSIONS,
    ExtensionType::KEY_SHARE,
    ExtensionType::SIGNATURE_ALGORITHMS,
];
const SERVER_HELLO_MANDATORY: [u16; 2] =
    [ExtensionType::SUPPORTED_VERSIONS, ExtensionType::KEY_SHARE];
const CERTIFICATE_REQUEST_MANDATORY: [u16; 1] = [ExtensionType::SIGNATURE_ALGORITHMS];

fn require(exts: &[Extension], mandatory: &[u16]) -> Result<(), WireError> {
    match mandatory
        .iter()
        .find(|&&t| find_extension(exts, t).is_none())
    {
        Some(&missing) => Err(WireError::MissingMandatoryExtension(missing)),
        None => Ok(()),
    }
}

fn no_duplicates(exts: &[Extension]) -> Result<(), WireError> {
    for (i, e) in exts.iter().enumerate() {
        if exts[..i].iter().any(|p| p.extension_type == e.extension_type) {
            return Err(WireError::DuplicateExtension(e.extension_type));
        }
    }
    Ok(())
}

fn u16_list(items: &[u16]) -> Vec<u8> {
    items.iter().flat_map(|v| v.to_be_bytes()).collect()
}

/// Serializes a handshake message as `msg_type(1) || length(3) || body`.
pub fn encode_message(msg: &HandshakeMessage) -> Result<Vec<u8>, WireError> {
    let mut body = Writer::new();
    match msg {
        HandshakeMessage::ClientHello(ch) => {
            require(&ch.extensions, &CLIENT_HELLO_MANDATORY)?;
            no_duplicates(&ch.extensions)?;
            body.u16(LEGACY_VERSION).bytes(&ch.random);
            body.vec("legacy_session_id", 1, 0, 32, &ch.legacy_session_id)?;
            body.vec(
                "cipher_suites",
                2,
                2,
                0xfffe,
                &u16_list(&ch.cipher_suites),
            )?;
            body.vec("legacy_compression_methods", 1, 1, 0xff, &[0])?;
            encode_extensions(&mut body, &ch.extensions, 8)?;
        }
        HandshakeMessage::ServerHello(sh) => {
            require(&sh.extensions, &SERVER_HELLO_MANDATORY)?;
            no_duplicates(&sh.extensions)?;
            body.u16(LEGACY_VERSION).bytes(&sh.random);
            body.vec("legacy_session_id_echo", 1, 0, 32, &sh.legacy_session_id_echo)?;
            body.u16(sh.cipher_suite).u8(0);
            encode_extensions(&mut body, &sh.extensions, 6)?;
        }
        HandshakeMessage::EncryptedExtensions(ee) => {
            no_duplicates(&ee.extensions)?;
            encode_extensions(&mut body, &ee.extensions, 0)?;
        }
        HandshakeMessage::CertificateRequest(cr) => {
            require(&cr.extensions, &CERTIFICATE_REQUEST_MANDATORY)?;
            no_duplicates(&cr.extensions)?;
            body.vec("certificate_request_context", 1, 0, 0xff, &cr.context)?;
            encode_extensions(&mut body, &cr.extensions, 2)?;
        }
        HandshakeMessage::Certificate(c) => {
            if c.entries.is_empty() {
                return Err(WireError::VectorBoundViolation {
                    field: "certificate_list",
                    len: 0,
                });
            }
            body.vec("certificate_request_context", 1, 0, 0xff, &c.context)?;
            let mut list = Writer::new();
            for entry in &c.entries {
                no_duplicates(&entry.extensions)?;
                list.vec("cert_data", 3, 1, 0xff_ffff, &entry.cert_data)?;
                encode_extensions(&mut list, &entry.extensions, 0)?;
            }
            body.vec("certificate_list", 3, 1, 0xff_ffff, &list.finish())?;
        }
        HandshakeMessage::CertificateVerify(cv) => {
            body.u16(cv.scheme);
            body.vec("signature", 2, 0, 0xffff, &cv.signature)?;
        }
        HandshakeMessage::Finished(f) => {
            body.bytes(&f.verify_data);
        }
    }
    let mut out = Writer::new();
    out.u8(msg.msg_type() as u8);
    out.vec("handshake body", 3, 0, 0xff_ffff, &body.finish())?;
    Ok(out.finish())
}

/// Parses exactly one handshake message; trailing bytes are an error.
pub fn decode_message(bytes: &[u8]) -> Result<HandshakeMessage, WireError> {
    let mut r = Reader::new(bytes);
    let msg_type = r.u8()?;
    let len = r.u24()? as usize;
    let body = r.take(len)?;
    r.expect_end()?;
    let msg_type = HandshakeType::from_u8(msg_type)?;
    let mut b = Reader::new(body);
    let msg = match msg_type {
        HandshakeType::ClientHello => {
            if b.u16()? != LEGACY_VERSION {
                return Err(WireError::UnexpectedValue("legacy_version"));
            }
            let random = b.array::<32>()?;
            let legacy_session_id = b.vec("legacy_session_id", 1, 0, 32)?.to_vec();
            let suites = b.vec("cipher_suites", 2, 2, 0xfffe)?;
            if suites.len() % 2 != 0 {
                return Err(WireError::OddLength);
            }
            let cipher_suites = suites
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect();
            if b.vec("legacy_compression_methods", 1, 1, 0xff)? != [0] {
                return Err(WireError::UnexpectedValue("legacy_compression_methods"));
            }
            let extensions = decode_extensions(&mut b, 8)?;
            require(&extensions, &CLIENT_HELLO_MANDATORY)?;
            HandshakeMessage::ClientHello(ClientHello {
                random,
                legacy_session_id,
                cipher_suites,
                extensions,
            })
        }
        HandshakeType::ServerHello => {
            if b.u16()? != LEGACY_VERSION {
                return Err(WireError::UnexpectedValue("legacy_version"));
            }
            let random = b.array::<32>()?;
            let legacy_session_id_echo = b.vec("legacy_session_id_echo", 1, 0, 32)?.to_vec();
            let cipher_suite = b.u16()?;
            if b.u8()? != 0 {
                return Err(WireError::UnexpectedValue("legacy_compression_method"));
            }
            let extensions = decode_extensions(&mut b, 6)?;
            require(&extensions, &SERVER_HELLO_MANDATORY)?;
            HandshakeMessage::ServerHello(ServerHello {
                random,
                legacy_session_id_echo,
                cipher_suite,
                extensions,
            })
        }
        HandshakeType::EncryptedExtensions => {
            HandshakeMessage::EncryptedExtensions(EncryptedExtensions {
                extensions: decode_extensions(&mut b, 0)?,
            })
        }
        HandshakeType::CertificateRequest => {
            let context = b.vec("certificate_request_context", 1, 0, 0xff)?.to_vec();
            let extensions = decode_extensions(&mut b, 2)?;
            require(&extensions, &CERTIFICATE_REQUEST_MANDATORY)?;
            HandshakeMessage::CertificateRequest(CertificateRequest {
                context,
                extensions,
            })
        }
        HandshakeType::Certificate => {
            let context = b.vec("certificate_request_context", 1, 0, 0xff)?.to_vec();
            let mut list = Reader::new(b.vec("certificate_list", 3, 1, 0xff_ffff)?);
            let mut entries = Vec::new();
            while !list.is_empty() {
                let cert_data = list.vec("cert_data", 3, 1, 0xff_ffff)?.to_vec();
                let extensions = decode_extensions(&mut list, 0)?;
                entries.push(CertificateEntry {
                    cert_data,
                    extensions,
                });
            }
            HandshakeMessage::Certificate(Certificate { context, entries })
        }
        HandshakeType::CertificateVerify => {
            let scheme = b.u16()?;
            let signature = b.vec("signature", 2, 0, 0xffff)?.to_vec();
            HandshakeMessage::CertificateVerify(CertificateVerify { scheme, signature })
        }
        HandshakeType::Finished => HandshakeMessage::Finished(Finished {
            verify_data: b.take(b.remaining())?.to_vec(),
        }),
    };
    b.expect_end()?;
    Ok(msg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::{
        key_share_client, signature_algorithms, supported_versions_client, KeyShareEntry, ED25519,
        TLS13, TLS_AES_256_GCM_SHA384,
    };

    fn client_hello() -> ClientHello {
        ClientHello {
            random: [7; 32],
            legacy_session_id: vec![],
            cipher_suites: vec![TLS_AES_256_GCM_SHA384],
            extensions: vec![
                supported_versions_client(&[TLS13]).unwrap(),
                key_share_client(&[KeyShareEntry::x25519([9; 32])]).unwrap(),
                signature_algorithms(&[ED25519]).unwrap(),
            ],
        }
    }

    #[test]
    fn finished_framing() {
        let msg = HandshakeMessage::Finished(Finished {
            verify_data: vec![0xab; 48],
        });
        let bytes = encode_message(&msg).unwrap();
        assert_eq!(bytes.len(), 52);
        assert_eq!(&bytes[..4], &[20, 0, 0, 48]);
        assert_eq!(decode_message(&bytes).unwrap(), msg);
    }

    #[test]
    fn client_hello_without_extensions_is_rejected() {
        let mut ch = client_hello();
        ch.extensions.clear();
        assert_eq!(
            encode_message(&HandshakeMessage::ClientHello(ch)),
            Err(WireError::MissingMandatoryExtension(ExtensionType::SUPPORTED_VERSIONS))
        );
    }

    #[test]
    fn client_hello_missing_key_share_is_rejected() {
        let mut ch = client_hello();
        ch.extensions.retain(|e| e.extension_type != ExtensionType::KEY_SHARE);
        assert_eq!(
            encode_message(&HandshakeMessage::ClientHello(ch)),
            Err(WireError::MissingMandatoryExtension(ExtensionType::KEY_SHARE))
        );
    }

    #[test]
    fn vc_certificate_body_layout() {
        let msg = HandshakeMessage::Certificate(Certificate {
            context: vec![],
            entries: vec![CertificateEntry::new(vec![0x5a; 1331])],
        });
        let bytes = encode_message(&msg).unwrap();
        let body_len = 1 + 3 + 3 + 1331 + 2;
        assert_eq!(body_len, 1340);
        assert_eq!(bytes.len(), 4 + body_len);
        assert_eq!(&bytes[1..4], &[0x00, 0x05, 0x3c]);
        // context length, list length (1336), entry length (1331)
        assert_eq!(&bytes[4..11], &[0, 0x00, 0x05, 0x38, 0x00, 0x05, 0x33]);
        assert_eq!(&bytes[bytes.len() - 2..], &[0, 0]);
    }

    #[test]
    fn truncated_inputs() {
        assert_eq!(decode_message(&[20, 0, 0]), Err(WireError::Truncated));
        assert_eq!(
            decode_message(&[20, 0, 0, 5, 1, 2, 3, 4]),
            Err(WireError::Truncated)
        );
    }

    #[test]
    fn trailing_garbage_rejected() {
        let mut bytes = encode_message(&HandshakeMessage::ClientHello(client_hello())).unwrap();
        bytes.push(0);
        assert_eq!(decode_message(&bytes), Err(WireError::TrailingBytes(1)));

        let ee = HandshakeMessage::CertificateVerify(CertificateVerify {
            scheme: ED25519,
            signature: vec![1; 64],
        });
        let mut bytes = encode_message(&ee).unwrap();
        bytes[3] += 1;
        bytes.push(0xff);
        assert_eq!(decode_message(&bytes), Err(WireError::TrailingBytes(1)));
    }

    #[test]
    fn unknown_type() {
        assert_eq!(
            decode_message(&[99, 0, 0, 0]),
            Err(WireError::UnknownMessageType(99))
        );
    }

    #[test]
    fn empty_certificate_rejected_both_ways() {
        let msg = HandshakeMessage::Certificate(Certificate {
            context: vec![],
            entries: vec![],
        });
        assert!(matches!(
            encode_message(&msg),
            Err(WireError::VectorBoundViolation { .. })
        ));
        assert!(matches!(
            decode_message(&[11, 0, 0, 4, 0, 0, 0, 0]),
            Err(WireError::VectorBoundViolation { .. })
        ));
    }

    #[test]
    fn duplicate_extensions_rejected() {
        let mut ch = client_hello();
        ch.extensions.push(ch.extensions[0].clone());
        assert_eq!(
            encode_message(&HandshakeMessage::ClientHello(ch)),
            Err(WireError::DuplicateExtension(ExtensionType::SUPPORTED_VERSIONS))
        );
    }

    #[test]
    fn oversized_session_id() {
        let mut ch = client_hello();
        ch.legacy_session_id = vec![0; 33];
        assert!(matches!(
            encode_message(&HandshakeMessage::ClientHello(ch)),
            Err(WireError::FieldTooLong { field: "legacy_session_id", .. })
        ));
    }
}
