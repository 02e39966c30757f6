use std::fmt;

use super::codec::{Reader, Writer};
use super::WireError;

pub const TLS13: u16 = 0x0304;
pub const LEGACY_VERSION: u16 = 0x0303;
pub const X25519: u16 = 0x001d;
pub const ED25519: u16 = 0x0807;
pub const TLS_AES_256_GCM_SHA384: u16 = 0x1302;

/// Extension type code points used by this engine.
pub struct ExtensionType;

impl ExtensionType {
    pub const SIGNATURE_ALGORITHMS: u16 = 13;
    pub const CLIENT_CERTIFICATE_TYPE: u16 = 19;
    pub const SERVER_CERTIFICATE_TYPE: u16 = 20;
    pub const SUPPORTED_VERSIONS: u16 = 43;
    pub const KEY_SHARE: u16 = 51;
    /// Private-use default for `did_methods`; see [`CodePoints`].
    pub const DID_METHODS: u16 = 0xff00;
}

/// Certificate type as carried by the RFC 7250 extensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CertificateTypeCode(pub u8);

impl CertificateTypeCode {
    pub const X509: Self = Self(0);
    pub const RAW_PUBLIC_KEY: Self = Self(2);
    /// Default code for Verifiable Credentials; overridable via [`CodePoints`].
    pub const VC: Self = Self(240);
}

impl fmt::Display for CertificateTypeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::X509 => f.write_str("X.509"),
            Self::RAW_PUBLIC_KEY => f.write_str("RawPublicKey"),
            Self(c) => write!(f, "type({c})"),
        }
    }
}

/// Unregistered code points, configurable so both peers can agree on
/// alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodePoints {
    pub vc_certificate_type: CertificateTypeCode,
    pub did_methods_extension: u16,
}

impl Default for CodePoints {
    fn default() -> Self {
        Self {
            vc_certificate_type: CertificateTypeCode::VC,
            did_methods_extension: ExtensionType::DID_METHODS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Extension {
    pub extension_type: u16,
    pub extension_data: Vec<u8>,
}

impl Extension {
    pub fn new(extension_type: u16, extension_data: Vec<u8>) -> Self {
        Self {
            extension_type,
            extension_data,
        }
    }

    pub(crate) fn encode(&self, w: &mut Writer) -> Result<(), WireError> {
        w.u16(self.extension_type);
        w.vec("extension_data", 2, 0, 0xffff, &self.extension_data)?;
        Ok(())
    }

    pub(crate) fn decode(r: &mut Reader<'_>) -> Result<Self, WireError> {
        let extension_type = r.u16()?;
        let data = r.vec("extension_data", 2, 0, 0xffff)?;
        Ok(Self::new(extension_type, data.to_vec()))
    }
}

pub fn find_extension(exts: &[Extension], extension_type: u16) -> Option<&Extension> {
    exts.iter().find(|e| e.extension_type == extension_type)
}

pub(crate) fn encode_extensions(
    w: &mut Writer,
    exts: &[Extension],
    min: usize,
) -> Result<(), WireError> {
    let mut inner = Writer::new();
    for e in exts {
        e.encode(&mut inner)?;
    }
    w.vec("extensions", 2, min, 0xffff, &inner.finish())?;
    Ok(())
}

pub(crate) fn decode_extensions(
    r: &mut Reader<'_>,
    min: usize,
) -> Result<Vec<Extension>, WireError> {
    let mut inner = Reader::new(r.vec("extensions", 2, min, 0xffff)?);
    let mut out: Vec<Extension> = Vec::new();
    while !inner.is_empty() {
        let ext = Extension::decode(&mut inner)?;
        if out.iter().any(|e| e.extension_type == ext.extension_type) {
            return Err(WireError::DuplicateExtension(ext.extension_type));
        }
        out.push(ext);
    }
    Ok(out)
}

fn expect_type(ext: &Extension, expected: u16) -> Result<(), WireError> {
    if ext.extension_type == expected {
        Ok(())
    } else {
        Err(WireError::WrongExtensionType {
            expected,
            found: ext.extension_type,
        })
    }
}

// supported_versions

pub fn supported_versions_client(versions: &[u16]) -> Result<Extension, WireError> {
    let body: Vec<u8> = versions.iter().flat_map(|v| v.to_be_bytes()).collect();
    let mut w = Writer::new();
    w.vec("supported_versions", 1, 2, 254, &body)?;
    Ok(Extension::new(ExtensionType::SUPPORTED_VERSIONS, w.finish()))
}

pub fn parse_supported_versions_client(ext: &Extension) -> Result<Vec<u16>, WireError> {
    expect_type(ext, ExtensionType::SUPPORTED_VERSIONS)?;
    let mut r = Reader::new(&ext.extension_data);
    let body = r.vec("supported_versions", 1, 2, 254)?;
    r.expect_end()?;
    if body.len() % 2 != 0 {
        return Err(WireError::OddLength);
    }
    Ok(body
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect())
}

pub fn supported_versions_server(version: u16) -> Extension {
    Extension::new(
        ExtensionType::SUPPORTED_VERSIONS,
        version.to_be_bytes().to_vec(),
    )
}

pub fn parse_supported_versions_server(ext: &Extension) -> Result<u16, WireError> {
    expect_type(ext, ExtensionType::SUPPORTED_VERSIONS)?;
    let mut r = Reader::new(&ext.extension_data);
    let v = r.u16()?;
    r.expect_end()?;
    Ok(v)
}

// key_share

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyShareEntry {
    pub group: u16,
    pub key_exchange: Vec<u8>,
}

impl KeyShareEntry {
    pub fn x25519(public: [u8; 32]) -> Self {
        Self {
            group: X25519,
            key_exchange: public.to_vec(),
        }
    }

    fn encode(&self, w: &mut Writer) -> Result<(), WireError> {
        w.u16(self.group);
        w.vec("key_exchange", 2, 1, 0xffff, &self.key_exchange)?;
        Ok(())
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, WireError> {
        let group = r.u16()?;
        let key_exchange = r.vec("key_exchange", 2, 1, 0xffff)?.to_vec();
        if group != X25519 {
            return Err(WireError::UnsupportedCodePoint {
                what: "named group",
                value: group as u32,
            });
        }
        if key_exchange.len() != 32 {
            return Err(WireError::UnexpectedValue("x25519 key_exchange length"));
        }
        Ok(Self {
            group,
            key_exchange,
        })
    }

    /// The x25519 public value; entries are validated on decode.
    pub fn x25519_public(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        out.copy_from_slice(&self.key_exchange);
        out
    }
}

pub fn key_share_client(entries: &[KeyShareEntry]) -> Result<Extension, WireError> {
    let mut inner = Writer::new();
    for e in entries {
        e.encode(&mut inner)?;
    }
    let mut w = Writer::new();
    w.vec("client_shares", 2, 0, 0xffff, &inner.finish())?;
    Ok(Extension::new(ExtensionType::KEY_SHARE, w.finish()))
}

pub fn parse_key_share_client(ext: &Extension) -> Result<Vec<KeyShareEntry>, WireError> {
    expect_type(ext, ExtensionType::KEY_SHARE)?;
    let mut r = Reader::new(&ext.extension_data);
    let mut inner = Reader::new(r.vec("client_shares", 2, 0, 0xffff)?);
    r.expect_end()?;
    let mut out = Vec::new();
    while !inner.is_empty() {
        out.push(KeyShareEntry::decode(&mut inner)?);
    }
    Ok(out)
}

pub fn key_share_server(entry: &KeyShareEntry) -> Result<Extension, WireError> {
    let mut w = Writer::new();
    entry.encode(&mut w)?;
    Ok(Extension::new(ExtensionType::KEY_SHARE, w.finish()))
}

pub fn parse_key_share_server(ext: &Extension) -> Result<KeyShareEntry, WireError> {
    expect_type(ext, ExtensionType::KEY_SHARE)?;
    let mut r = Reader::new(&ext.extension_data);
    let entry = KeyShareEntry::decode(&mut r)?;
    r.expect_end()?;
    Ok(entry)
}

// signature_algorithms

pub fn signature_algorithms(schemes: &[u16]) -> Result<Extension, WireError> {
    let body: Vec<u8> = schemes.iter().flat_map(|s| s.to_be_bytes()).collect();
    let mut w = Writer::new();
    w.vec("supported_signature_algorithms", 2, 2, 0xfffe, &body)?;
    Ok(Extension::new(ExtensionType::SIGNATURE_ALGORITHMS, w.finish()))
}

pub fn parse_signature_algorithms(ext: &Extension) -> Result<Vec<u16>, WireError> {
    expect_type(ext, ExtensionType::SIGNATURE_ALGORITHMS)?;
    let mut r = Reader::new(&ext.extension_data);
    let body = r.vec("supported_signature_algorithms", 2, 2, 0xfffe)?;
    r.expect_end()?;
    if body.len() % 2 != 0 {
        return Err(WireError::OddLength);
    }
    let schemes: Vec<u16> = body
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    if let Some(&other) = schemes.iter().find(|&&s| s != ED25519) {
        return Err(WireError::UnsupportedCodePoint {
            what: "signature scheme",
            value: other as u32,
        });
    }
    Ok(schemes)
}

// client_certificate_type / server_certificate_type

/// ClientHello form: the sender's preference-ordered list.
pub fn certificate_type_list(
    extension_type: u16,
    types: &[CertificateTypeCode],
) -> Result<Extension, WireError> {
    let body: Vec<u8> = types.iter().map(|t| t.0).collect();
    let mut w = Writer::new();
    w.vec("certificate_types", 1, 1, 0xff, &body)?;
    Ok(Extension::new(extension_type, w.finish()))
}

pub fn parse_certificate_type_list(
    ext: &Extension,
) -> Result<Vec<CertificateTypeCode>, WireError> {
    let mut r = Reader::new(&ext.extension_data);
    let body = r.vec("certificate_types", 1, 1, 0xff)?;
    r.expect_end()?;
    Ok(body.iter().map(|&c| CertificateTypeCode(c)).collect())
}

/// EncryptedExtensions form: the single selected type.
pub fn certificate_type_selected(extension_type: u16, t: CertificateTypeCode) -> Extension {
    Extension::new(extension_type, vec![t.0])
}

pub fn parse_certificate_type_selected(ext: &Extension) -> Result<CertificateTypeCode, WireError> {
    let mut r = Reader::new(&ext.extension_data);
    let t = r.u8()?;
    r.expect_end()?;
    Ok(CertificateTypeCode(t))
}
