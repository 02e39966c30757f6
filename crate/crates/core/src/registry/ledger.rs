use std::collections::HashMap;
use std::sync::RwLock;

use super::RegistryError;
use crate::identity::{verify_signature, Did, DidDocument, IdentityKeyPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryStatus {
    Active,
    Deactivated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEntry {
    pub document: DidDocument,
    pub status: EntryStatus,
    pub version: u64,
}

/// In-process DID registry. Entries are never removed: a deactivated DID
/// stays as a tombstone.
#[derive(Debug, Default)]
pub struct Ledger {
    entries: RwLock<HashMap<Did, LedgerEntry>>,
}

/// Message a controller signs to deactivate `did`.
pub fn deactivation_message(did: &Did) -> Vec<u8> {
    format!("ssitls deactivate {did}").into_bytes()
}

/// Proof of control for replacing `did`'s document with `new_doc`.
pub fn sign_update(current_key: &IdentityKeyPair, new_doc: &DidDocument) -> [u8; 64] {
    current_key.sign(&new_doc.canonical_bytes())
}

pub fn sign_deactivation(current_key: &IdentityKeyPair, did: &Did) -> [u8; 64] {
    current_key.sign(&deactivation_message(did))
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create(&self, doc: DidDocument) -> Result<Did, RegistryError> {
        doc.validate()?;
        let mut entries = self.entries.write().expect("ledger lock poisoned");
        if entries.contains_key(&doc.id) {
            return Err(RegistryError::AlreadyExists(doc.id.to_string()));
        }
        let did = doc.id.clone();
        entries.insert(
            did.clone(),
            LedgerEntry {
                document: doc,
                status: EntryStatus::Active,
                version: 1,
            },
        );
        Ok(did)
    }

    /// Current active document and its version.
    pub fn lookup(&self, did: &Did) -> Result<(DidDocument, u64), RegistryError> {
        let entries = self.entries.read().expect("ledger lock poisoned");
        let entry = entries
            .get(did)
            .ok_or_else(|| RegistryError::NotFound(did.to_string()))?;
        match entry.status {
            EntryStatus::Active => Ok((entry.document.clone(), entry.version)),
            EntryStatus::Deactivated => Err(RegistryError::Deactivated(did.to_string())),
        }
    }

    pub fn entry(&self, did: &Did) -> Option<LedgerEntry> {
        self.entries
            .read()
            .expect("ledger lock poisoned")
            .get(did)
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("ledger lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Replaces the document; `proof` must be the current key's signature
    /// over the new document's canonical bytes.
    pub fn update(
        &self,
        did: &Did,
        new_doc: DidDocument,
        proof: &[u8],
    ) -> Result<u64, RegistryError> {
        new_doc.validate()?;
        if &new_doc.id != did {
            return Err(RegistryError::InvalidDocument(
                "new document id differs from the DID being updated".into(),
            ));
        }
        let mut entries = self.entries.write().expect("ledger lock poisoned");
        let entry = active_entry(&mut entries, did)?;
        if !verify_signature(&entry.document.public_key, &new_doc.canonical_bytes(), proof) {
            return Err(RegistryError::BadControlProof);
        }
        entry.document = new_doc;
        entry.version += 1;
        Ok(entry.version)
    }

    /// Permanently deactivates `did`; returns the final version.
    pub fn deactivate(&self, did: &Did, proof: &[u8]) -> Result<u64, RegistryError> {
        let mut entries = self.entries.write().expect("ledger lock poisoned");
        let entry = active_entry(&mut entries, did)?;
        if !verify_signature(&entry.document.public_key, &deactivation_message(did), proof) {
            return Err(RegistryError::BadControlProof);
        }
        entry.status = EntryStatus::Deactivated;
        entry.version += 1;
        Ok(entry.version)
    }
}

fn active_entry<'a>(
    entries: &'a mut HashMap<Did, LedgerEntry>,
    did: &Did,
) -> Result<&'a mut LedgerEntry, RegistryError> {
    let entry = entries
        .get_mut(did)
        .ok_or_else(|| RegistryError::NotFound(did.to_string()))?;
    if entry.status == EntryStatus::Deactivated {
        return Err(RegistryError::Deactivated(did.to_string()));
    }
    Ok(entry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::{generate_identity, Identity};
    use crate::wire::DidMethodRegistry;

    fn ident(seed: &[u8]) -> Identity {
        generate_identity("iota", Some(seed), &DidMethodRegistry::default()).unwrap()
    }

    #[test]
    fn create_then_lookup() {
        let ledger = Ledger::new();
        let id = ident(b"a");
        assert_eq!(ledger.create(id.document.clone()).unwrap(), id.did);
        assert_eq!(ledger.lookup(&id.did).unwrap(), (id.document.clone(), 1));
        assert_eq!(
            ledger.create(id.document.clone()),
            Err(RegistryError::AlreadyExists(id.did.to_string()))
        );
        assert!(matches!(
            ledger.lookup(&ident(b"b").did),
            Err(RegistryError::NotFound(_))
        ));
    }

    #[test]
    fn tombstones_persist() {
        let ledger = Ledger::new();
        let id = ident(b"a");
        ledger.create(id.document.clone()).unwrap();
        ledger
            .deactivate(&id.did, &sign_deactivation(&id.keypair, &id.did))
            .unwrap();
        assert!(matches!(ledger.lookup(&id.did), Err(RegistryError::Deactivated(_))));
        assert!(matches!(
            ledger.create(id.document.clone()),
            Err(RegistryError::AlreadyExists(_))
        ));
        assert!(matches!(
            ledger.deactivate(&id.did, &sign_deactivation(&id.keypair, &id.did)),
            Err(RegistryError::Deactivated(_))
        ));
        let new_doc = DidDocument::new(id.did.clone(), ident(b"z").keypair.public_key());
        assert!(matches!(
            ledger.update(&id.did, new_doc.clone(), &sign_update(&id.keypair, &new_doc)),
            Err(RegistryError::Deactivated(_))
        ));
    }

    #[test]
    fn update_rotates_key() {
        let ledger = Ledger::new();
        let id = ident(b"a");
        ledger.create(id.document.clone()).unwrap();
        let next = ident(b"next");
        let new_doc = DidDocument::new(id.did.clone(), next.keypair.public_key());

        let stranger = ident(b"stranger");
        assert_eq!(
            ledger.update(&id.did, new_doc.clone(), &sign_update(&stranger.keypair, &new_doc)),
            Err(RegistryError::BadControlProof)
        );

        assert_eq!(
            ledger.update(&id.did, new_doc.clone(), &sign_update(&id.keypair, &new_doc)),
            Ok(2)
        );
        assert_eq!(ledger.lookup(&id.did).unwrap(), (new_doc, 2));

        // The pre-rotation key no longer controls the DID.
        assert_eq!(
            ledger.deactivate(&id.did, &sign_deactivation(&id.keypair, &id.did)),
            Err(RegistryError::BadControlProof)
        );
        assert_eq!(
            ledger.deactivate(&id.did, &sign_deactivation(&next.keypair, &id.did)),
            Ok(3)
        );
    }

    #[test]
    fn update_of_unknown() {
        let ledger = Ledger::new();
        let id = ident(b"a");
        assert!(matches!(
            ledger.update(&id.did, id.document.clone(), &[0; 64]),
            Err(RegistryError::NotFound(_))
        ));
        assert!(matches!(
            ledger.deactivate(&id.did, &[0; 64]),
            Err(RegistryError::NotFound(_))
        ));
    }
}
