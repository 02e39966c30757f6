//! On-disk identity bundles.
//!
//! ```text
//! <dir>/key               hex of the 32-byte Ed25519 secret
//! <dir>/did-document.pem  "DID DOCUMENT" armor
//! <dir>/vc.pem            "VC" armor (optional)
//! <dir>/chain.pem         "CHAIN CERTIFICATE" blocks, leaf first (chain bundles)
//! ```

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use super::{
    decode_pem, encode_pem, ChainBundle, ChainCertificate, DidDocument, Identity, IdentityError,
    IdentityKeyPair, VerifiableCredential,
};

pub const KEY_FILE: &str = "key";
pub const DID_DOCUMENT_FILE: &str = "did-document.pem";
pub const VC_FILE: &str = "vc.pem";
pub const CHAIN_FILE: &str = "chain.pem";
pub const CHAIN_PEM_LABEL: &str = "CHAIN CERTIFICATE";

/// Writes `contents` to a file that must not exist yet.
pub fn write_new(path: &Path, contents: &[u8]) -> Result<(), IdentityError> {
    let mut f = OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)
        .map_err(|e| IdentityError::Io(format!("{}: {e}", path.display())))?;
    f.write_all(contents)?;
    Ok(())
}

fn read(path: &Path) -> Result<String, IdentityError> {
    fs::read_to_string(path).map_err(|e| IdentityError::Io(format!("{}: {e}", path.display())))
}

pub fn read_key(path: &Path) -> Result<IdentityKeyPair, IdentityError> {
    let text = read(path)?;
    let secret: [u8; 32] = hex::decode(text.trim())
        .ok()
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| IdentityError::SchemaViolation(format!("{}: expected 64 hex digits", path.display())))?;
    Ok(IdentityKeyPair::from_secret(secret))
}

pub fn write_key(path: &Path, key: &IdentityKeyPair) -> Result<(), IdentityError> {
    write_new(path, format!("{}\n", hex::encode(key.secret_bytes())).as_bytes())
}

#[derive(Debug, Clone)]
pub struct IdentityBundle {
    pub identity: Identity,
    pub vc: Option<VerifiableCredential>,
}

impl IdentityBundle {
    /// Writes key and DID Document (and VC if present); never overwrites.
    pub fn save(&self, dir: &Path) -> Result<(), IdentityError> {
        fs::create_dir_all(dir)?;
        for name in [KEY_FILE, DID_DOCUMENT_FILE, VC_FILE] {
            if dir.join(name).exists() {
                return Err(IdentityError::Io(format!(
                    "{} already exists; refusing to overwrite",
                    dir.join(name).display()
                )));
            }
        }
        write_key(&dir.join(KEY_FILE), &self.identity.keypair)?;
        write_new(
            &dir.join(DID_DOCUMENT_FILE),
            encode_pem(&self.identity.document).as_bytes(),
        )?;
        if let Some(vc) = &self.vc {
            write_new(&dir.join(VC_FILE), encode_pem(vc).as_bytes())?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, IdentityError> {
        let keypair = read_key(&dir.join(KEY_FILE))?;
        let document: DidDocument = decode_pem(&read(&dir.join(DID_DOCUMENT_FILE))?)?;
        if document.public_key != keypair.public_key() {
            return Err(IdentityError::SchemaViolation(
                "key file does not match the DID Document".into(),
            ));
        }
        let vc_path = dir.join(VC_FILE);
        let vc = if vc_path.exists() {
            Some(decode_pem(&read(&vc_path)?)?)
        } else {
            None
        };
        Ok(Self {
            identity: Identity {
                keypair,
                did: document.id.clone(),
                document,
            },
            vc,
        })
    }
}

pub fn encode_chain_pem(chain: &[ChainCertificate]) -> String {
    let blocks: Vec<pem::Pem> = chain
        .iter()
        .map(|c| pem::Pem::new(CHAIN_PEM_LABEL, c.to_bytes()))
        .collect();
    pem::encode_many_config(
        &blocks,
        pem::EncodeConfig::new().set_line_ending(pem::LineEnding::LF),
    )
}

pub fn decode_chain_pem(text: &str) -> Result<Vec<ChainCertificate>, IdentityError> {
    let blocks = pem::parse_many(text).map_err(|e| IdentityError::BadArmor(e.to_string()))?;
    if blocks.is_empty() {
        return Err(IdentityError::BadArmor("no PEM blocks".into()));
    }
    blocks
        .iter()
        .map(|b| {
            if b.tag() != CHAIN_PEM_LABEL {
                return Err(IdentityError::LabelMismatch {
                    expected: CHAIN_PEM_LABEL,
                    found: b.tag().to_string(),
                });
            }
            ChainCertificate::from_bytes(b.contents())
        })
        .collect()
}

pub fn save_chain_bundle(dir: &Path, bundle: &ChainBundle) -> Result<(), IdentityError> {
    fs::create_dir_all(dir)?;
    for name in [KEY_FILE, CHAIN_FILE] {
        if dir.join(name).exists() {
            return Err(IdentityError::Io(format!(
                "{} already exists; refusing to overwrite",
                dir.join(name).display()
            )));
        }
    }
    write_key(&dir.join(KEY_FILE), &bundle.leaf_key)?;
    write_new(&dir.join(CHAIN_FILE), encode_chain_pem(&bundle.chain).as_bytes())
}

pub fn load_chain_bundle(dir: &Path) -> Result<ChainBundle, IdentityError> {
    let leaf_key = read_key(&dir.join(KEY_FILE))?;
    let chain = decode_chain_pem(&read(&dir.join(CHAIN_FILE))?)?;
    if chain[0].subject_pk != leaf_key.public_key() {
        return Err(IdentityError::SchemaViolation(
            "key file does not match the leaf certificate".into(),
        ));
    }
    Ok(ChainBundle { leaf_key, chain })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::{generate_identity, make_chain, Validity};
    use crate::wire::DidMethodRegistry;

    #[test]
    fn identity_bundle_round_trip_and_no_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let id = generate_identity("iota", Some(b"b"), &DidMethodRegistry::default()).unwrap();
        let bundle = IdentityBundle {
            identity: id.clone(),
            vc: None,
        };
        bundle.save(dir.path()).unwrap();
        let loaded = IdentityBundle::load(dir.path()).unwrap();
        assert_eq!(loaded.identity.document, id.document);
        assert!(loaded.vc.is_none());
        assert!(matches!(bundle.save(dir.path()), Err(IdentityError::Io(_))));
    }

    #[test]
    fn chain_bundle_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let b = make_chain(
            ["r", "i", "l"],
            Validity::days_from(chrono::Utc::now(), 1),
            Some(b"c"),
        )
        .unwrap();
        save_chain_bundle(dir.path(), &b).unwrap();
        let loaded = load_chain_bundle(dir.path()).unwrap();
        assert_eq!(loaded.chain, b.chain);
        assert_eq!(loaded.leaf_key.public_key(), b.leaf_key.public_key());
    }
}
