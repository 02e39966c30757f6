use serde_json::Value;

use super::{DidDocument, IdentityError, VerifiableCredential};

/// Objects with a deterministic binary form and a PEM label.
///
/// The binary ("DER") form is a 4-byte big-endian length followed by the
/// sorted-key JSON serialization, proof included. Decoding accepts only
/// the exact bytes the encoder would produce.
pub trait DerObject: Sized {
    const PEM_LABEL: &'static str;

    fn to_json_value(&self) -> Value;

    fn from_json_value(v: &Value) -> Result<Self, IdentityError>;
}

impl DerObject for VerifiableCredential {
    const PEM_LABEL: &'static str = "VC";

    fn to_json_value(&self) -> Value {
        self.to_json(true)
    }

    fn from_json_value(v: &Value) -> Result<Self, IdentityError> {
        Self::from_json(v)
    }
}

impl DerObject for DidDocument {
    const PEM_LABEL: &'static str = "DID DOCUMENT";

    fn to_json_value(&self) -> Value {
        self.to_json()
    }

    fn from_json_value(v: &Value) -> Result<Self, IdentityError> {
        Self::from_json(v)
    }
}

/// Sorted-key compact JSON of the full object.
pub fn serialize<T: DerObject>(obj: &T) -> Vec<u8> {
    serde_json::to_vec(&obj.to_json_value()).expect("JSON values always serialize")
}

/// Inverse of [`serialize`], rejecting non-canonical input.
pub fn deserialize<T: DerObject>(body: &[u8]) -> Result<T, IdentityError> {
    let v: Value = serde_json::from_slice(body)
        .map_err(|e| IdentityError::SchemaViolation(format!("invalid JSON: {e}")))?;
    let obj = T::from_json_value(&v)?;
    if serialize(&obj) != body {
        return Err(IdentityError::SchemaViolation("non-canonical serialization".into()));
    }
    Ok(obj)
}

pub fn encode_der<T: DerObject>(obj: &T) -> Vec<u8> {
    let body = serialize(obj);
    let mut out = Vec::with_capacity(4 + body.len());
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

pub fn decode_der<T: DerObject>(bytes: &[u8]) -> Result<T, IdentityError> {
    let (len, body) = bytes.split_first_chunk::<4>().ok_or(IdentityError::Truncated)?;
    let len = u32::from_be_bytes(*len) as usize;
    if body.len() < len {
        return Err(IdentityError::Truncated);
    }
    if body.len() > len {
        return Err(IdentityError::SchemaViolation(format!(
            "{} trailing bytes",
            body.len() - len
        )));
    }
    deserialize(body)
}

pub fn encode_pem<T: DerObject>(obj: &T) -> String {
    let p = pem::Pem::new(T::PEM_LABEL, encode_der(obj));
    pem::encode_config(&p, pem::EncodeConfig::new().set_line_ending(pem::LineEnding::LF))
}

pub fn decode_pem<T: DerObject>(text: &str) -> Result<T, IdentityError> {
    let p = pem::parse(text).map_err(|e| IdentityError::BadArmor(e.to_string()))?;
    if p.tag() != T::PEM_LABEL {
        return Err(IdentityError::LabelMismatch {
            expected: T::PEM_LABEL,
            found: p.tag().to_string(),
        });
    }
    decode_der(p.contents())
}
