//! Generators for handshake messages and credential claims.

use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};
use proptest::collection::{btree_map, vec};
use proptest::prelude::*;
use serde_json::Value;
use ssitls_core::identity::{
    decode_der, decode_pem, encode_der, encode_pem, generate_identity, issue_vc, verify_vc, DidDocument,
    IdentityError, Timestamp, Validity, VerifiableCredential,
};
use ssitls_core::wire::*;

pub fn bytes(max: usize) -> impl Strategy<Value = Vec<u8>> {
    vec(any::<u8>(), 0..max)
}

pub fn cert_types() -> impl Strategy<Value = Vec<CertificateTypeCode>> {
    vec(any::<u8>().prop_map(CertificateTypeCode), 1..5)
}

pub fn did_methods() -> impl Strategy<Value = DidMethodList> {
    vec(any::<u16>(), 1..6).prop_map(|c| DidMethodList::from_codes(&c))
}

/// Structured negotiation extensions plus opaque ones, unique by type.
pub fn extensions(mandatory: Vec<Extension>) -> impl Strategy<Value = Vec<Extension>> {
    let structured = (
        proptest::option::of(cert_types()),
        proptest::option::of(cert_types()),
        proptest::option::of(did_methods()),
        vec((0x7000u16..0x7fff, bytes(40)), 0..4),
    );
    structured.prop_map(move |(cct, sct, dm, opaque)| {
        let mut exts = mandatory.clone();
        if let Some(t) = cct {
            exts.push(certificate_type_list(ExtensionType::CLIENT_CERTIFICATE_TYPE, &t).unwrap());
        }
        if let Some(t) = sct {
            exts.push(certificate_type_list(ExtensionType::SERVER_CERTIFICATE_TYPE, &t).unwrap());
        }
        if let Some(d) = dm {
            exts.push(encode_did_methods(&d, ExtensionType::DID_METHODS).unwrap());
        }
        for (t, d) in opaque {
            if !exts.iter().any(|e| e.extension_type == t) {
                exts.push(Extension::new(t, d));
            }
        }
        exts
    })
}

pub fn hello_mandatory(server: bool, share: [u8; 32]) -> Vec<Extension> {
    if server {
        vec![
            supported_versions_server(TLS13),
            key_share_server(&KeyShareEntry::x25519(share)).unwrap(),
        ]
    } else {
        vec![
            supported_versions_client(&[TLS13]).unwrap(),
            key_share_client(&[KeyShareEntry::x25519(share)]).unwrap(),
            signature_algorithms(&[ED25519]).unwrap(),
        ]
    }
}

pub fn message() -> impl Strategy<Value = HandshakeMessage> {
    let ch = (any::<[u8; 32]>(), bytes(33), vec(any::<u16>(), 1..5), any::<[u8; 32]>())
        .prop_flat_map(|(random, sid, suites, share)| {
            extensions(hello_mandatory(false, share)).prop_map(move |extensions| {
                HandshakeMessage::ClientHello(ClientHello {
                    random,
                    legacy_session_id: sid.clone(),
                    cipher_suites: suites.clone(),
                    extensions,
                })
            })
        });
    let sh = (any::<[u8; 32]>(), bytes(33), any::<u16>(), any::<[u8; 32]>()).prop_flat_map(
        |(random, sid, suite, share)| {
            extensions(hello_mandatory(true, share)).prop_map(move |extensions| {
                HandshakeMessage::ServerHello(ServerHello {
                    random,
                    legacy_session_id_echo: sid.clone(),
                    cipher_suite: suite,
                    extensions,
                })
            })
        },
    );
    let ee = extensions(vec![]).prop_map(|extensions| {
        HandshakeMessage::EncryptedExtensions(EncryptedExtensions { extensions })
    });
    let cr = (bytes(8), extensions(vec![signature_algorithms(&[ED25519]).unwrap()])).prop_map(
        |(context, extensions)| HandshakeMessage::CertificateRequest(CertificateRequest { context, extensions }),
    );
    let entry = (vec(any::<u8>(), 1..300), extensions(vec![])).prop_map(|(cert_data, extensions)| {
        CertificateEntry {
            cert_data,
            extensions,
        }
    });
    let cert = (bytes(4), vec(entry, 1..4))
        .prop_map(|(context, entries)| HandshakeMessage::Certificate(Certificate { context, entries }));
    let cv = (any::<u16>(), bytes(100))
        .prop_map(|(scheme, signature)| HandshakeMessage::CertificateVerify(CertificateVerify { scheme, signature }));
    let fin = bytes(64).prop_map(|verify_data| HandshakeMessage::Finished(Finished { verify_data }));
    prop_oneof![ch, sh, ee, cr, cert, cv, fin]
}

pub fn claim_value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        any::<i64>().prop_map(Value::from),
        any::<bool>().prop_map(Value::from),
        "[^\\\\]{0,12}".prop_map(Value::from),
        Just(Value::Null),
    ];
    leaf.prop_recursive(2, 12, 4, |inner| {
        prop_oneof![
            vec(inner.clone(), 0..4).prop_map(Value::Array),
            btree_map("[a-z]{1,6}", inner, 0..4)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

pub fn claims() -> impl Strategy<Value = BTreeMap<String, Value>> {
    btree_map("claim[A-Za-z0-9]{0,8}", claim_value(), 0..5)
}

pub fn check_message(msg: &HandshakeMessage) -> Result<(), String> {
    let encoded = encode_message(msg).map_err(|e| e.to_string())?;
    let decoded = decode_message(&encoded).map_err(|e| e.to_string())?;
    if &decoded != msg {
        return Err(format!("decoded {decoded:?}"));
    }
    if encode_message(&decoded).map_err(|e| e.to_string())? != encoded {
        return Err("re-encoding differs".into());
    }
    Ok(())
}

pub const METHODS: [&str; 4] = ["iota", "key", "web", "example"];

pub fn fixed_now() -> Timestamp {
    Utc.timestamp_opt(1_700_000_000, 0).unwrap()
}

/// An issuer, a subject, claims and one single-byte mutation to apply.
#[derive(Debug, Clone)]
pub struct CredentialCase {
    pub issuer_seed: [u8; 32],
    pub subject_seed: [u8; 32],
    pub method: usize,
    pub claims: BTreeMap<String, Value>,
    pub days: i64,
    pub pos: prop::sample::Index,
    pub mask: u8,
}

pub fn credential_case() -> impl Strategy<Value = CredentialCase> {
    (
        any::<[u8; 32]>(),
        any::<[u8; 32]>(),
        0usize..METHODS.len(),
        claims(),
        1i64..3650,
        any::<prop::sample::Index>(),
        1u8..=255,
    )
        .prop_map(|(issuer_seed, subject_seed, method, claims, days, pos, mask)| CredentialCase {
            issuer_seed,
            subject_seed,
            method,
            claims,
            days,
            pos,
            mask,
        })
}

fn same<T: PartialEq + std::fmt::Debug>(what: &str, a: &T, b: &T) -> Result<(), String> {
    if a == b {
        Ok(())
    } else {
        Err(format!("{what}: {a:?} != {b:?}"))
    }
}

/// DID Document and VC round-trips through DER and PEM, verification, and
/// rejection of the mutated DER.
pub fn check_credential(case: &CredentialCase) -> Result<(), String> {
    let err = |e: IdentityError| e.to_string();
    let table = DidMethodRegistry::default();
    let issuer = generate_identity(METHODS[case.method], Some(&case.issuer_seed), &table).map_err(err)?;
    let subject = generate_identity("iota", Some(&case.subject_seed), &table).map_err(err)?;

    let doc_der = encode_der(&subject.document);
    let doc: DidDocument = decode_der(&doc_der).map_err(err)?;
    same("document", &doc, &subject.document)?;
    same("document der", &encode_der(&doc), &doc_der)?;
    let doc_pem = encode_pem(&subject.document);
    same("document pem", &decode_pem::<DidDocument>(&doc_pem).map_err(err)?, &subject.document)?;

    let validity = Validity::days_from(fixed_now() - chrono::Duration::hours(1), case.days);
    let vc = issue_vc(&issuer, &subject.did, case.claims.clone(), validity).map_err(err)?;
    let der = encode_der(&vc);
    let back: VerifiableCredential = decode_der(&der).map_err(err)?;
    same("vc", &back, &vc)?;
    same("vc der", &encode_der(&back), &der)?;
    let pem = encode_pem(&vc);
    let from_pem: VerifiableCredential = decode_pem(&pem).map_err(err)?;
    same("vc pem", &encode_pem(&from_pem), &pem)?;
    let pk = issuer.keypair.public_key();
    same("verified subject", &verify_vc(&vc, &pk, fixed_now()).map_err(err)?, &subject.did)?;

    let at = case.pos.index(der.len());
    let mut mutated = der.clone();
    mutated[at] ^= case.mask;
    let accepted = decode_der::<VerifiableCredential>(&mutated)
        .map(|m| verify_vc(&m, &pk, fixed_now()).is_ok())
        .unwrap_or(false);
    if accepted {
        return Err(format!("mutation at {at} accepted"));
    }
    Ok(())
}
