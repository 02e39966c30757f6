//! Minimal certificate chains with the cryptographic shape of an Ed25519
//! X.509 chain: every link carries one subject public key and one
//! signature by its issuer.

use chrono::{TimeZone, Utc};

use super::did::verify_signature;
use super::{IdentityError, IdentityKeyPair, PublicKey, Timestamp, Validity};
use crate::wire::codec::{Reader, Writer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainCertificate {
    pub subject: String,
    pub subject_pk: PublicKey,
    pub issuer: String,
    pub validity: Validity,
    pub signature: [u8; 64],
}

impl ChainCertificate {
    fn tbs(
        subject: &str,
        subject_pk: &PublicKey,
        issuer: &str,
        validity: &Validity,
    ) -> Result<Vec<u8>, IdentityError> {
        let mut w = Writer::new();
        let too_long = |_| IdentityError::SchemaViolation("name longer than 255 bytes".into());
        w.vec("subject", 1, 1, 0xff, subject.as_bytes()).map_err(too_long)?;
        w.bytes(subject_pk.as_bytes());
        w.vec("issuer", 1, 1, 0xff, issuer.as_bytes()).map_err(too_long)?;
        w.bytes(&validity.not_before.timestamp().to_be_bytes());
        w.bytes(&validity.not_after.timestamp().to_be_bytes());
        Ok(w.finish())
    }

    /// Signs a new certificate for `subject_pk` with `issuer_key`.
    pub fn issue(
        subject: &str,
        subject_pk: PublicKey,
        issuer: &str,
        issuer_key: &IdentityKeyPair,
        validity: Validity,
    ) -> Result<Self, IdentityError> {
        let tbs = Self::tbs(subject, &subject_pk, issuer, &validity)?;
        Ok(Self {
            subject: subject.to_string(),
            subject_pk,
            issuer: issuer.to_string(),
            validity,
            signature: issuer_key.sign(&tbs),
        })
    }

    pub fn is_self_signed(&self) -> bool {
        self.subject == self.issuer
    }

    pub fn signed_by(&self, issuer_pk: &PublicKey) -> bool {
        Self::tbs(&self.subject, &self.subject_pk, &self.issuer, &self.validity)
            .map(|tbs| verify_signature(issuer_pk, &tbs, &self.signature))
            .unwrap_or(false)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Self::tbs(&self.subject, &self.subject_pk, &self.issuer, &self.validity)
            .expect("names were validated at construction");
        out.extend_from_slice(&self.signature);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IdentityError> {
        let mut r = Reader::new(bytes);
        let short = |_| IdentityError::Truncated;
        let name = |b: &[u8]| {
            String::from_utf8(b.to_vec())
                .map_err(|_| IdentityError::SchemaViolation("name is not UTF-8".into()))
        };
        let subject = name(r.vec("subject", 1, 1, 0xff).map_err(short)?)?;
        let pk = r.array::<32>().map_err(short)?;
        let subject_pk = PublicKey::from_bytes(&pk)
            .map_err(|_| IdentityError::SchemaViolation("invalid subject key".into()))?;
        let issuer = name(r.vec("issuer", 1, 1, 0xff).map_err(short)?)?;
        let ts = |secs: [u8; 8]| {
            Utc.timestamp_opt(i64::from_be_bytes(secs), 0)
                .single()
                .ok_or_else(|| IdentityError::SchemaViolation("timestamp out of range".into()))
        };
        let not_before = ts(r.array::<8>().map_err(short)?)?;
        let not_after = ts(r.array::<8>().map_err(short)?)?;
        let signature = r.array::<64>().map_err(short)?;
        if !r.is_empty() {
            return Err(IdentityError::SchemaViolation("trailing bytes after certificate".into()));
        }
        Ok(Self {
            subject,
            subject_pk,
            issuer,
            validity: Validity {
                not_before,
                not_after,
            },
            signature,
        })
    }
}

/// A leaf key with its chain, leaf first and the self-signed root last.
#[derive(Debug, Clone)]
pub struct ChainBundle {
    pub leaf_key: IdentityKeyPair,
    pub chain: Vec<ChainCertificate>,
}

impl ChainBundle {
    pub fn leaf(&self) -> &ChainCertificate {
        &self.chain[0]
    }

    pub fn root(&self) -> &ChainCertificate {
        self.chain.last().expect("chains are never empty")
    }

    /// The links that go on the wire: everything except the root.
    pub fn transmitted(&self) -> &[ChainCertificate] {
        &self.chain[..self.chain.len() - 1]
    }
}

/// Builds root → intermediate → leaf. `names` is `[root, intermediate, leaf]`;
/// with `seed` every key is deterministic.
pub fn make_chain(
    names: [&str; 3],
    validity: Validity,
    seed: Option<&[u8]>,
) -> Result<ChainBundle, IdentityError> {
    let key = |role: &str| match seed {
        Some(s) => IdentityKeyPair::from_seed(&[s, b"/", role.as_bytes()].concat()),
        None => IdentityKeyPair::generate(),
    };
    let [root_name, int_name, leaf_name] = names;
    let root_key = key("root");
    let int_key = key("intermediate");
    let leaf_key = key("leaf");
    let root = ChainCertificate::issue(root_name, root_key.public_key(), root_name, &root_key, validity)?;
    let intermediate =
        ChainCertificate::issue(int_name, int_key.public_key(), root_name, &root_key, validity)?;
    let leaf = ChainCertificate::issue(leaf_name, leaf_key.public_key(), int_name, &int_key, validity)?;
    Ok(ChainBundle {
        leaf_key,
        chain: vec![leaf, intermediate, root],
    })
}

/// Verifies a leaf-first chain up to one of `anchors` and returns the leaf
/// key. The root may be included or omitted.
pub fn verify_chain(
    chain: &[ChainCertificate],
    anchors: &[ChainCertificate],
    now: Timestamp,
) -> Result<PublicKey, IdentityError> {
    let leaf = chain
        .first()
        .ok_or_else(|| IdentityError::BrokenChain("empty chain".into()))?;
    for pair in chain.windows(2) {
        let (child, parent) = (&pair[0], &pair[1]);
        if child.issuer != parent.subject || !child.signed_by(&parent.subject_pk) {
            return Err(IdentityError::BrokenChain(format!(
                "`{}` is not signed by `{}`",
                child.subject, parent.subject
            )));
        }
    }
    let top = chain.last().expect("non-empty");
    let anchor = if top.is_self_signed() {
        if !top.signed_by(&top.subject_pk) {
            return Err(IdentityError::BrokenChain("root self-signature invalid".into()));
        }
        anchors.iter().find(|a| *a == top).ok_or(IdentityError::UntrustedRoot)?
    } else {
        let anchor = anchors
            .iter()
            .find(|a| a.subject == top.issuer)
            .ok_or(IdentityError::UntrustedRoot)?;
        if !top.signed_by(&anchor.subject_pk) {
            return Err(IdentityError::BrokenChain(format!(
                "`{}` is not signed by anchor `{}`",
                top.subject, anchor.subject
            )));
        }
        anchor
    };
    for cert in chain.iter().chain(std::iter::once(anchor)) {
        cert.validity.check(now)?;
    }
    Ok(leaf.subject_pk)
}
