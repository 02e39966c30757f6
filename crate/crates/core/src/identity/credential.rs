use std::collections::BTreeMap;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use chrono::{DateTime, SecondsFormat};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use super::did::{json_object, json_str, verify_signature};
use super::{whole_seconds, Did, Identity, IdentityError, PublicKey, Timestamp, Validity};

pub const CREDENTIALS_CONTEXT: &str = "https://www.w3.org/2018/credentials/v1";
pub const VC_TYPE: &str = "VerifiableCredential";
pub const IOT_CREDENTIAL_TYPE: &str = "IoTCredential";
pub const PROOF_TYPE: &str = "DataIntegrityProof";
/// Sorted-key JSON with Ed25519; see [`VerifiableCredential::canonical_bytes`].
pub const CRYPTOSUITE: &str = "eddsa-jcs-2022";
pub const PROOF_PURPOSE: &str = "assertionMethod";

pub fn format_timestamp(t: &Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Accepts only the exact form [`format_timestamp`] produces.
pub fn parse_timestamp(s: &str) -> Result<Timestamp, IdentityError> {
    let t = DateTime::parse_from_rfc3339(s)
        .map_err(|_| IdentityError::SchemaViolation(format!("bad timestamp `{s}`")))?
        .to_utc();
    if format_timestamp(&t) != s {
        return Err(IdentityError::SchemaViolation(format!(
            "timestamp `{s}` is not in canonical UTC form"
        )));
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CredentialSubject {
    pub id: Did,
    /// Free-form claims; never contains the key `id`.
    pub claims: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proof {
    pub proof_type: String,
    pub cryptosuite: String,
    pub created: Timestamp,
    pub proof_purpose: String,
    pub verification_method: String,
    pub proof_value: [u8; 64],
}

impl Proof {
    fn options_json(&self) -> Value {
        json!({
            "type": self.proof_type,
            "cryptosuite": self.cryptosuite,
            "created": format_timestamp(&self.created),
            "proofPurpose": self.proof_purpose,
            "verificationMethod": self.verification_method,
        })
    }

    fn to_json(&self) -> Value {
        let mut v = self.options_json();
        v["proofValue"] = Value::String(format!("u{}", URL_SAFE_NO_PAD.encode(self.proof_value)));
        v
    }

    fn from_json(v: &Value) -> Result<Self, IdentityError> {
        let obj = json_object(
            v,
            &["type", "cryptosuite", "created", "proofPurpose", "verificationMethod", "proofValue"],
        )?;
        let encoded = json_str(obj, "proofValue")?;
        let proof_value: [u8; 64] = encoded
            .strip_prefix('u')
            .and_then(|b| URL_SAFE_NO_PAD.decode(b).ok())
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| IdentityError::SchemaViolation("proofValue must encode 64 bytes".into()))?;
        Ok(Self {
            proof_type: json_str(obj, "type")?.to_string(),
            cryptosuite: json_str(obj, "cryptosuite")?.to_string(),
            created: parse_timestamp(json_str(obj, "created")?)?,
            proof_purpose: json_str(obj, "proofPurpose")?.to_string(),
            verification_method: json_str(obj, "verificationMethod")?.to_string(),
            proof_value,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifiableCredential {
    pub context: Vec<String>,
    pub id: String,
    pub types: Vec<String>,
    pub issuer: Did,
    pub issuance_date: Timestamp,
    pub expiration_date: Timestamp,
    pub credential_subject: CredentialSubject,
    pub proof: Option<Proof>,
}

fn string_list(v: &Value, field: &str) -> Result<Vec<String>, IdentityError> {
    v.as_array()
        .and_then(|a| {
            a.iter()
                .map(|x| x.as_str().map(str::to_string))
                .collect::<Option<Vec<_>>>()
        })
        .ok_or_else(|| IdentityError::SchemaViolation(format!("`{field}` must be a string array")))
}

impl VerifiableCredential {
    pub fn subject(&self) -> &Did {
        &self.credential_subject.id
    }

    pub fn to_json(&self, with_proof: bool) -> Value {
        let mut subject: Map<String, Value> = self
            .credential_subject
            .claims
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        subject.insert("id".into(), Value::String(self.credential_subject.id.to_string()));
        let mut v = json!({
            "@context": self.context,
            "id": self.id,
            "type": self.types,
            "issuer": self.issuer.to_string(),
            "issuanceDate": format_timestamp(&self.issuance_date),
            "expirationDate": format_timestamp(&self.expiration_date),
            "credentialSubject": subject,
        });
        if let (true, Some(p)) = (with_proof, &self.proof) {
            v["proof"] = p.to_json();
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<Self, IdentityError> {
        let obj = v
            .as_object()
            .ok_or_else(|| IdentityError::SchemaViolation("expected a JSON object".into()))?;
        const FIELDS: [&str; 7] = [
            "@context",
            "id",
            "type",
            "issuer",
            "issuanceDate",
            "expirationDate",
            "credentialSubject",
        ];
        let has_proof = obj.contains_key("proof");
        let expected = FIELDS.len() + usize::from(has_proof);
        if obj.len() != expected || !FIELDS.iter().all(|k| obj.contains_key(*k)) {
            return Err(IdentityError::SchemaViolation("unexpected credential fields".into()));
        }
        let mut subject = obj["credentialSubject"]
            .as_object()
            .cloned()
            .ok_or_else(|| IdentityError::SchemaViolation("credentialSubject must be an object".into()))?;
        let subject_id = subject
            .remove("id")
            .and_then(|v| v.as_str().map(str::to_string))
            .ok_or_else(|| IdentityError::SchemaViolation("credentialSubject.id missing".into()))?;
        let vc = Self {
            context: string_list(&obj["@context"], "@context")?,
            id: json_str(obj, "id")?.to_string(),
            types: string_list(&obj["type"], "type")?,
            issuer: json_str(obj, "issuer")?.parse()?,
            issuance_date: parse_timestamp(json_str(obj, "issuanceDate")?)?,
            expiration_date: parse_timestamp(json_str(obj, "expirationDate")?)?,
            credential_subject: CredentialSubject {
                id: subject_id.parse()?,
                claims: subject.into_iter().collect(),
            },
            proof: obj.get("proof").map(Proof::from_json).transpose()?,
        };
        vc.check_schema()?;
        Ok(vc)
    }

    /// Deterministic serialization of the proof-less credential: keys sorted
    /// at every level, compact, UTF-8.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.to_json(false)).expect("JSON values always serialize")
    }

    /// Structural invariants that do not depend on time or keys.
    pub fn check_schema(&self) -> Result<(), IdentityError> {
        let violation = |m: &str| Err(IdentityError::SchemaViolation(m.into()));
        if self.context.first().map(String::as_str) != Some(CREDENTIALS_CONTEXT) {
            return violation("first @context entry must be the credentials context");
        }
        if !self.types.iter().any(|t| t == VC_TYPE) {
            return violation("type must contain VerifiableCredential");
        }
        if self.issuance_date >= self.expiration_date {
            return violation("issuanceDate must precede expirationDate");
        }
        if self.credential_subject.claims.contains_key("id") {
            return violation("claims may not override the subject id");
        }
        if let Some(p) = &self.proof {
            if !p
                .verification_method
                .strip_prefix(&self.issuer.to_string())
                .is_some_and(|rest| rest.starts_with('#'))
            {
                return violation("proof.verificationMethod must belong to the issuer");
            }
            if p.proof_type != PROOF_TYPE || p.cryptosuite != CRYPTOSUITE {
                return violation("unsupported proof type or cryptosuite");
            }
            if p.proof_purpose != PROOF_PURPOSE {
                return violation("unsupported proof purpose");
            }
        }
        Ok(())
    }

    /// Bytes the issuer signs: hash of the proof options followed by the hash
    /// of the proof-less document, so every proof field except the value
    /// itself is covered.
    fn signing_input(&self, proof: &Proof) -> Vec<u8> {
        let options = serde_json::to_vec(&proof.options_json()).expect("JSON values always serialize");
        let mut out = Vec::with_capacity(64);
        out.extend_from_slice(&Sha256::digest(options));
        out.extend_from_slice(&Sha256::digest(self.canonical_bytes()));
        out
    }
}

/// Issues an `IoTCredential` about `subject`, signed by `issuer`.
pub fn issue_vc(
    issuer: &Identity,
    subject: &Did,
    claims: BTreeMap<String, Value>,
    validity: Validity,
) -> Result<VerifiableCredential, IdentityError> {
    let issuance_date = whole_seconds(validity.not_before);
    let expiration_date = whole_seconds(validity.not_after);
    if issuance_date >= expiration_date {
        return Err(IdentityError::InvalidValidityWindow);
    }
    let mut vc = VerifiableCredential {
        context: vec![CREDENTIALS_CONTEXT.to_string()],
        id: String::new(),
        types: vec![VC_TYPE.to_string(), IOT_CREDENTIAL_TYPE.to_string()],
        issuer: issuer.did.clone(),
        issuance_date,
        expiration_date,
        credential_subject: CredentialSubject {
            id: subject.clone(),
            claims,
        },
        proof: None,
    };
    let digest = Sha256::digest(vc.canonical_bytes());
    vc.id = format!("urn:uuid:{}", uuid_like(&digest[..16]));
    vc.check_schema()?;
    let mut proof = Proof {
        proof_type: PROOF_TYPE.to_string(),
        cryptosuite: CRYPTOSUITE.to_string(),
        created: issuance_date,
        proof_purpose: PROOF_PURPOSE.to_string(),
        verification_method: issuer.document.verification_method_id.clone(),
        proof_value: [0; 64],
    };
    proof.proof_value = issuer.keypair.sign(&vc.signing_input(&proof));
    vc.proof = Some(proof);
    Ok(vc)
}

fn uuid_like(b: &[u8]) -> String {
    let h = hex::encode(b);
    format!("{}-{}-{}-{}-{}", &h[0..8], &h[8..12], &h[12..16], &h[16..20], &h[20..32])
}

/// Checks schema, validity window and issuer proof; returns the subject DID.
pub fn verify_vc(
    vc: &VerifiableCredential,
    issuer_pk: &PublicKey,
    now: Timestamp,
) -> Result<Did, IdentityError> {
    vc.check_schema()?;
    let proof = vc
        .proof
        .as_ref()
        .ok_or_else(|| IdentityError::SchemaViolation("credential carries no proof".into()))?;
    Validity {
        not_before: vc.issuance_date,
        not_after: vc.expiration_date,
    }
    .check(now)?;
    if !verify_signature(issuer_pk, &vc.signing_input(proof), &proof.proof_value) {
        return Err(IdentityError::BadIssuerSignature);
    }
    Ok(vc.credential_subject.id.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::generate_identity;
    use crate::wire::DidMethodRegistry;
    use chrono::TimeZone;

    fn t(secs: i64) -> Timestamp {
        chrono::Utc.timestamp_opt(1_700_000_000 + secs, 0).unwrap()
    }

    fn setup() -> (Identity, Identity) {
        let reg = DidMethodRegistry::default();
        (
            generate_identity("iota", Some(b"issuer"), &reg).unwrap(),
            generate_identity("iota", Some(b"subject"), &reg).unwrap(),
        )
    }

    fn claims() -> BTreeMap<String, Value> {
        [
            ("deviceType".to_string(), json!("sensor")),
            ("location".to_string(), json!({"room": 4, "building": "B"})),
        ]
        .into_iter()
        .collect()
    }

    #[test]
    fn issue_then_verify() {
        let (issuer, subject) = setup();
        let vc = issue_vc(&issuer, &subject.did, claims(), Validity::new(t(0), t(1000))).unwrap();
        assert_eq!(
            verify_vc(&vc, &issuer.keypair.public_key(), t(10)).unwrap(),
            subject.did
        );
        assert_eq!(vc.types, [VC_TYPE, IOT_CREDENTIAL_TYPE]);
    }

    #[test]
    fn tampered_claim_rejected() {
        let (issuer, subject) = setup();
        let mut vc = issue_vc(&issuer, &subject.did, claims(), Validity::new(t(0), t(1000))).unwrap();
        vc.credential_subject
            .claims
            .insert("deviceType".into(), json!("sensos"));
        assert_eq!(
            verify_vc(&vc, &issuer.keypair.public_key(), t(10)),
            Err(IdentityError::BadIssuerSignature)
        );
    }

    #[test]
    fn proof_metadata_is_signed() {
        let (issuer, subject) = setup();
        let mut vc = issue_vc(&issuer, &subject.did, claims(), Validity::new(t(0), t(1000))).unwrap();
        vc.proof.as_mut().unwrap().created = t(5);
        assert_eq!(
            verify_vc(&vc, &issuer.keypair.public_key(), t(10)),
            Err(IdentityError::BadIssuerSignature)
        );
    }

    #[test]
    fn validity_errors() {
        let (issuer, subject) = setup();
        assert_eq!(
            issue_vc(&issuer, &subject.did, claims(), Validity::new(t(10), t(0))),
            Err(IdentityError::InvalidValidityWindow)
        );
        let vc = issue_vc(&issuer, &subject.did, claims(), Validity::new(t(0), t(1000))).unwrap();
        let pk = issuer.keypair.public_key();
        assert_eq!(verify_vc(&vc, &pk, t(1001)), Err(IdentityError::Expired));
        assert_eq!(verify_vc(&vc, &pk, t(-1)), Err(IdentityError::NotYetValid));
        assert_eq!(
            verify_vc(&vc, &subject.keypair.public_key(), t(5)),
            Err(IdentityError::BadIssuerSignature)
        );
    }

    #[test]
    fn canonical_bytes_properties() {
        let (issuer, subject) = setup();
        let forward: BTreeMap<_, _> = claims();
        let mut reversed = BTreeMap::new();
        for (k, v) in claims().into_iter().rev() {
            reversed.insert(k, v);
        }
        let v = Validity::new(t(0), t(1000));
        let a = issue_vc(&issuer, &subject.did, forward, v).unwrap();
        let b = issue_vc(&issuer, &subject.did, reversed, v).unwrap();
        assert_eq!(a.canonical_bytes(), b.canonical_bytes());

        let c = issue_vc(&issuer, &subject.did, claims(), Validity::new(t(0), t(1001))).unwrap();
        assert_ne!(a.canonical_bytes(), c.canonical_bytes());

        let mut stripped = a.clone();
        stripped.proof = None;
        assert_eq!(a.canonical_bytes(), stripped.canonical_bytes());

        let text = String::from_utf8(a.canonical_bytes()).unwrap();
        assert!(!text.contains(' '));
        assert!(text.starts_with("{\"@context\""));
        assert!(text.contains("\"expirationDate\":\"2023-11-14T22:30:00Z\""));
    }

    #[test]
    fn json_round_trip_and_strictness() {
        let (issuer, subject) = setup();
        let vc = issue_vc(&issuer, &subject.did, claims(), Validity::new(t(0), t(1000))).unwrap();
        let v = vc.to_json(true);
        assert_eq!(VerifiableCredential::from_json(&v).unwrap(), vc);

        let mut extra = v.clone();
        extra["unexpected"] = json!(1);
        assert!(VerifiableCredential::from_json(&extra).is_err());

        let mut bad_type = v.clone();
        bad_type["type"] = json!(["IoTCredential"]);
        assert!(matches!(
            VerifiableCredential::from_json(&bad_type),
            Err(IdentityError::SchemaViolation(_))
        ));

        let mut bad_vm = v;
        bad_vm["proof"]["verificationMethod"] = json!("did:iota:someoneelse#keys-1");
        assert!(VerifiableCredential::from_json(&bad_vm).is_err());
    }

    #[test]
    fn timestamps_must_be_canonical() {
        assert!(parse_timestamp("2024-01-01T00:00:00Z").is_ok());
        assert!(parse_timestamp("2024-01-01T00:00:00+00:00").is_err());
        assert!(parse_timestamp("2024-01-01T00:00:00.5Z").is_err());
    }
}
