use std::fmt;
use std::str::FromStr;

use ed25519_dalek::{Signature, Signer, SigningKey};
use rand::rngs::OsRng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{IdentityError, PublicKey};
use crate::wire::{is_method_name, DidMethodRegistry};

/// Long-term Ed25519 identity key.
#[derive(Clone)]
pub struct IdentityKeyPair {
    signing: SigningKey,
}

impl fmt::Debug for IdentityKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IdentityKeyPair")
            .field("pk", &hex::encode(self.public_key().as_bytes()))
            .finish_non_exhaustive()
    }
}

impl IdentityKeyPair {
    pub fn from_secret(secret: [u8; 32]) -> Self {
        Self {
            signing: SigningKey::from_bytes(&secret),
        }
    }

    /// Deterministic key derived from arbitrary seed material.
    pub fn from_seed(seed: &[u8]) -> Self {
        let digest: [u8; 32] = Sha256::new()
            .chain_update(b"ssitls identity key")
            .chain_update(seed)
            .finalize()
            .into();
        Self::from_secret(digest)
    }

    pub fn generate() -> Self {
        Self {
            signing: SigningKey::generate(&mut OsRng),
        }
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }

    pub fn public_key(&self) -> PublicKey {
        self.signing.verifying_key()
    }

    pub fn sign(&self, msg: &[u8]) -> [u8; 64] {
        self.signing.sign(msg).to_bytes()
    }
}

pub fn verify_signature(pk: &PublicKey, msg: &[u8], sig: &[u8]) -> bool {
    let Ok(sig) = Signature::from_slice(sig) else {
        return false;
    };
    pk.verify_strict(msg, &sig).is_ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Did {
    method: String,
    id: String,
}

impl Did {
    pub fn new(method: &str, id: &str) -> Result<Self, IdentityError> {
        if !is_method_name(method) || id.is_empty() || id.contains(char::is_whitespace) {
            return Err(IdentityError::InvalidDid(format!("did:{method}:{id}")));
        }
        Ok(Self {
            method: method.to_string(),
            id: id.to_string(),
        })
    }

    /// DID whose method-specific id is the hex SHA-256 of `pk`.
    pub fn for_key(method: &str, pk: &PublicKey) -> Result<Self, IdentityError> {
        Self::new(method, &hex::encode(Sha256::digest(pk.as_bytes())))
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn method_specific_id(&self) -> &str {
        &self.id
    }
}

impl fmt::Display for Did {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "did:{}:{}", self.method, self.id)
    }
}

impl FromStr for Did {
    type Err = IdentityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || IdentityError::InvalidDid(s.to_string());
        let rest = s.strip_prefix("did:").ok_or_else(invalid)?;
        let (method, id) = rest.split_once(':').ok_or_else(invalid)?;
        Self::new(method, id).map_err(|_| invalid())
    }
}

pub const KEY_TYPE: &str = "Ed25519VerificationKey2020";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DidDocument {
    pub id: Did,
    pub verification_method_id: String,
    pub key_type: String,
    pub controller: Did,
    pub public_key: PublicKey,
}

impl DidDocument {
    pub fn new(did: Did, public_key: PublicKey) -> Self {
        Self {
            verification_method_id: format!("{did}#keys-1"),
            key_type: KEY_TYPE.to_string(),
            controller: did.clone(),
            id: did,
            public_key,
        }
    }

    pub fn validate(&self) -> Result<(), IdentityError> {
        if self.controller != self.id {
            return Err(IdentityError::SchemaViolation(
                "controller must equal id".into(),
            ));
        }
        if self.verification_method_id != format!("{}#keys-1", self.id) {
            return Err(IdentityError::SchemaViolation(
                "verification method must be <id>#keys-1".into(),
            ));
        }
        if self.key_type != KEY_TYPE {
            return Err(IdentityError::SchemaViolation(format!(
                "unsupported key type {}",
                self.key_type
            )));
        }
        Ok(())
    }

    /// Sorted-key compact serialization, the registry's response body.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.to_json()).expect("JSON values always serialize")
    }

    pub fn to_json(&self) -> Value {
        json!({
            "id": self.id.to_string(),
            "controller": self.controller.to_string(),
            "verificationMethod": {
                "id": self.verification_method_id,
                "type": self.key_type,
                "controller": self.controller.to_string(),
                "publicKeyHex": hex::encode(self.public_key.as_bytes()),
            },
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, IdentityError> {
        let obj = json_object(v, &["id", "controller", "verificationMethod"])?;
        let vm = json_object(&obj["verificationMethod"], &["id", "type", "controller", "publicKeyHex"])?;
        let id: Did = json_str(obj, "id")?.parse()?;
        let controller: Did = json_str(obj, "controller")?.parse()?;
        if json_str(vm, "controller")? != json_str(obj, "controller")? {
            return Err(IdentityError::SchemaViolation(
                "verification method controller differs".into(),
            ));
        }
        let pk_hex = json_str(vm, "publicKeyHex")?;
        let pk_bytes: [u8; 32] = hex::decode(pk_hex)
            .ok()
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| IdentityError::SchemaViolation("publicKeyHex must be 32 bytes".into()))?;
        if hex::encode(pk_bytes) != pk_hex {
            return Err(IdentityError::SchemaViolation("publicKeyHex not lowercase".into()));
        }
        let public_key = PublicKey::from_bytes(&pk_bytes)
            .map_err(|_| IdentityError::SchemaViolation("invalid Ed25519 public key".into()))?;
        let doc = Self {
            id,
            verification_method_id: json_str(vm, "id")?.to_string(),
            key_type: json_str(vm, "type")?.to_string(),
            controller,
            public_key,
        };
        doc.validate()?;
        Ok(doc)
    }
}

pub(crate) fn json_object<'a>(
    v: &'a Value,
    keys: &[&str],
) -> Result<&'a serde_json::Map<String, Value>, IdentityError> {
    let obj = v
        .as_object()
        .ok_or_else(|| IdentityError::SchemaViolation("expected a JSON object".into()))?;
    if obj.len() != keys.len() || !keys.iter().all(|k| obj.contains_key(*k)) {
        return Err(IdentityError::SchemaViolation(format!(
            "expected exactly the fields {keys:?}"
        )));
    }
    Ok(obj)
}

pub(crate) fn json_str<'a>(
    obj: &'a serde_json::Map<String, Value>,
    key: &str,
) -> Result<&'a str, IdentityError> {
    obj.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| IdentityError::SchemaViolation(format!("`{key}` must be a string")))
}

/// An endpoint's key pair with its DID and DID Document.
#[derive(Debug, Clone)]
pub struct Identity {
    pub keypair: IdentityKeyPair,
    pub did: Did,
    pub document: DidDocument,
}

impl Identity {
    pub fn from_keypair(method: &str, keypair: IdentityKeyPair) -> Result<Self, IdentityError> {
        let did = Did::for_key(method, &keypair.public_key())?;
        let document = DidDocument::new(did.clone(), keypair.public_key());
        Ok(Self {
            keypair,
            did,
            document,
        })
    }
}

/// Creates a key pair, DID and DID Document. With `seed` the result is
/// deterministic; without it fresh OS entropy is used.
pub fn generate_identity(
    method: &str,
    seed: Option<&[u8]>,
    methods: &DidMethodRegistry,
) -> Result<Identity, IdentityError> {
    if methods.code_of(method).is_none() {
        return Err(IdentityError::UnknownMethod(method.to_string()));
    }
    let keypair = match seed {
        Some(s) => IdentityKeyPair::from_seed(s),
        None => IdentityKeyPair::generate(),
    };
    Identity::from_keypair(method, keypair)
}
