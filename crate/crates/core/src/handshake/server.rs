use std::io::{Read, Write};
use std::time::Instant;

use rand::RngCore;
use x25519_dalek::{PublicKey as EphemeralPublic, StaticSecret};

use super::auth::authenticate_peer;
use super::run::endpoint_rng;
use super::transport::encode_own;
use super::{
    build_certificate, build_certificate_verify, check_own_did_in_shared, finished_mac,
    negotiate_cert_types, negotiate_did_methods, traffic_keys, verify_certificate_verify,
    verify_finished, Alert, ClientOffers, Credential, EndpointConfig, EndpointReport, Established,
    FlightMetrics, HandshakeError, HandshakeSecrets, RecordLayer, Resolutions, Role, Stage,
    Transcript,
};
use crate::wire::{
    certificate_type_selected, decode_did_methods, encode_did_methods, find_extension,
    key_share_server, parse_certificate_type_list, parse_key_share_client,
    parse_signature_algorithms, parse_supported_versions_client, signature_algorithms,
    supported_versions_server, CertificateRequest, EncryptedExtensions, ExtensionType, Finished,
    HandshakeMessage, HandshakeType, KeyShareEntry, ServerHello, WireError, ED25519, TLS13,
    TLS_AES_256_GCM_SHA384, X25519,
};

fn fail(alert: Alert, stage: Stage, reason: impl Into<String>) -> HandshakeError {
    HandshakeError::local(alert, stage, reason)
}

fn decode_err(stage: Stage) -> impl Fn(WireError) -> HandshakeError {
    move |e| fail(Alert::DecodeError, stage, e.to_string())
}

/// Runs the server side of the handshake over `stream`.
pub fn server_handshake<S: Read + Write>(
    cfg: &EndpointConfig,
    stream: S,
) -> Result<Established<S>, HandshakeError> {
    if cfg.role != Role::Server {
        return Err(HandshakeError::Config("server_handshake needs a server config".into()));
    }
    cfg.validate()?;
    let mut layer = RecordLayer::new(stream);
    match run(cfg, &mut layer) {
        Ok(report) => Ok(Established::new(report, layer)),
        Err(e) => {
            if let HandshakeError::Local { alert, stage, .. } = &e {
                layer.send_alert(*alert, *stage);
            }
            Err(e)
        }
    }
}

fn run<S: Read + Write>(
    cfg: &EndpointConfig,
    layer: &mut RecordLayer<S>,
) -> Result<EndpointReport, HandshakeError> {
    let mut rng = endpoint_rng(cfg);
    let mut transcript = Transcript::new();
    let mut metrics = FlightMetrics::default();
    let mut resolutions = cfg
        .resolver
        .as_deref()
        .map(|ch| Resolutions::new(ch, cfg.cache_resolves));

    // ClientHello
    let stage = Stage::ClientHello;
    let (encoded, msg) = layer.recv_handshake(stage)?;
    // The clock starts once a client shows up.
    let start = Instant::now();
    let HandshakeMessage::ClientHello(ch) = msg else {
        return Err(fail(Alert::HandshakeFailure, stage, "expected ClientHello"));
    };
    transcript.add(HandshakeType::ClientHello, &encoded);
    if !ch.cipher_suites.contains(&TLS_AES_256_GCM_SHA384) {
        return Err(fail(Alert::HandshakeFailure, stage, "no common cipher suite"));
    }
    let versions = find_extension(&ch.extensions, ExtensionType::SUPPORTED_VERSIONS)
        .map(parse_supported_versions_client)
        .transpose()
        .map_err(decode_err(stage))?
        .unwrap_or_default();
    if !versions.contains(&TLS13) {
        return Err(fail(Alert::HandshakeFailure, stage, "client does not offer TLS 1.3"));
    }
    let shares = find_extension(&ch.extensions, ExtensionType::KEY_SHARE)
        .map(parse_key_share_client)
        .transpose()
        .map_err(decode_err(stage))?
        .unwrap_or_default();
    let Some(client_share) = shares.iter().find(|e| e.group == X25519) else {
        return Err(fail(Alert::HandshakeFailure, stage, "no x25519 key share"));
    };
    let schemes = find_extension(&ch.extensions, ExtensionType::SIGNATURE_ALGORITHMS)
        .map(parse_signature_algorithms)
        .transpose()
        .map_err(decode_err(stage))?
        .unwrap_or_default();
    if !schemes.contains(&ED25519) {
        return Err(fail(Alert::HandshakeFailure, stage, "client does not accept Ed25519"));
    }

    let offers = if cfg.rfc7250_enabled {
        let list = |t| {
            find_extension(&ch.extensions, t)
                .map(parse_certificate_type_list)
                .transpose()
                .map_err(decode_err(stage))
        };
        let did_ext = cfg.code_points.did_methods_extension;
        ClientOffers {
            client_cert_types: list(ExtensionType::CLIENT_CERTIFICATE_TYPE)?,
            server_cert_types: list(ExtensionType::SERVER_CERTIFICATE_TYPE)?,
            did_methods: find_extension(&ch.extensions, did_ext)
                .map(|e| decode_did_methods(e, did_ext))
                .transpose()
                .map_err(decode_err(stage))?,
        }
    } else {
        // A server without certificate-type support does not see them.
        ClientOffers::default()
    };
    let mut negotiation =
        negotiate_cert_types(&offers, cfg).map_err(|a| fail(a, stage, "no common certificate type"))?;
    let vc_selected = negotiation.uses(cfg.vc_code());
    if !negotiation.fallback {
        negotiation.shared_did_methods = match &offers.did_methods {
            Some(client_methods) => negotiate_did_methods(client_methods, &cfg.did_methods, vc_selected)
                .map_err(|a| fail(a, stage, "no shared DID method"))?,
            None if vc_selected => {
                return Err(fail(Alert::HandshakeFailure, stage, "VC selected but client sent no did_methods"))
            }
            None => Default::default(),
        };
    }
    let credential = cfg
        .credential_for(negotiation.server_cert_type)
        .expect("validated: every offered type has a credential");
    if let Credential::Vc(b) = credential {
        check_own_did_in_shared(&b.holder.did, &negotiation.shared_did_methods, &cfg.method_table)
            .map_err(|a| fail(a, stage, "our DID method is not in the shared list"))?;
    }

    // ServerHello
    let stage = Stage::ServerHello;
    let mut random = [0u8; 32];
    rng.fill_bytes(&mut random);
    let mut eph = [0u8; 32];
    rng.fill_bytes(&mut eph);
    let eph = StaticSecret::from(eph);
    let shared = eph.diffie_hellman(&EphemeralPublic::from(client_share.x25519_public()));
    if !shared.was_contributory() {
        return Err(fail(Alert::HandshakeFailure, stage, "degenerate key share"));
    }
    let own_err = |e: WireError| fail(Alert::HandshakeFailure, stage, e.to_string());
    let sh = HandshakeMessage::ServerHello(ServerHello {
        random,
        legacy_session_id_echo: ch.legacy_session_id.clone(),
        cipher_suite: TLS_AES_256_GCM_SHA384,
        extensions: vec![
            supported_versions_server(TLS13),
            key_share_server(&KeyShareEntry::x25519(EphemeralPublic::from(&eph).to_bytes()))
                .map_err(own_err)?,
        ],
    });
    let encoded = encode_own(&sh, stage)?;
    layer.send_handshake(&encoded, stage)?;
    transcript.add(sh.msg_type(), &encoded);
    let hs = HandshakeSecrets::derive(shared.to_bytes(), &transcript.current_hash());
    layer.set_write_keys(traffic_keys(&hs.server_handshake_traffic));
    layer.set_read_keys(traffic_keys(&hs.client_handshake_traffic));

    // EncryptedExtensions
    let stage = Stage::EncryptedExtensions;
    let own_err = |e: WireError| fail(Alert::HandshakeFailure, stage, e.to_string());
    let mut extensions = Vec::new();
    let mut client_type_ext = None;
    if !negotiation.fallback {
        if offers.server_cert_types.is_some() {
            extensions.push(certificate_type_selected(
                ExtensionType::SERVER_CERTIFICATE_TYPE,
                negotiation.server_cert_type,
            ));
        }
        if let (Some(t), Some(_)) = (negotiation.client_cert_type, &offers.client_cert_types) {
            let ext = certificate_type_selected(ExtensionType::CLIENT_CERTIFICATE_TYPE, t);
            extensions.push(ext.clone());
            client_type_ext = Some(ext);
        }
        if !negotiation.shared_did_methods.is_empty() {
            extensions.push(
                encode_did_methods(&negotiation.shared_did_methods, cfg.code_points.did_methods_extension)
                    .map_err(own_err)?,
            );
        }
    }
    let ee = HandshakeMessage::EncryptedExtensions(EncryptedExtensions { extensions });
    let encoded = encode_own(&ee, stage)?;
    layer.send_handshake(&encoded, stage)?;
    transcript.add(ee.msg_type(), &encoded);

    if negotiation.client_cert_type.is_some() {
        let stage = Stage::CertificateRequest;
        let own_err = |e: WireError| fail(Alert::HandshakeFailure, stage, e.to_string());
        let mut extensions = vec![signature_algorithms(&[ED25519]).map_err(own_err)?];
        extensions.extend(client_type_ext);
        let cr = HandshakeMessage::CertificateRequest(CertificateRequest {
            context: Vec::new(),
            extensions,
        });
        let encoded = encode_own(&cr, stage)?;
        layer.send_handshake(&encoded, stage)?;
        transcript.add(cr.msg_type(), &encoded);
    }

    // Certificate, CertificateVerify, Finished
    let stage = Stage::Certificate;
    let (cert, sent) = build_certificate(credential, negotiation.server_cert_type, &cfg.code_points)
        .map_err(|e| fail(Alert::HandshakeFailure, stage, e.to_string()))?;
    let msg = HandshakeMessage::Certificate(cert);
    let encoded = encode_own(&msg, stage)?;
    layer.send_handshake(&encoded, stage)?;
    transcript.add(msg.msg_type(), &encoded);
    metrics.pk_objects_sent += sent;

    let stage = Stage::CertificateVerify;
    let cv = build_certificate_verify(credential.signing_key(), &transcript.current_hash(), Role::Server);
    metrics.pk_objects_sent.signatures += cv.signature.len();
    let msg = HandshakeMessage::CertificateVerify(cv);
    let encoded = encode_own(&msg, stage)?;
    layer.send_handshake(&encoded, stage)?;
    transcript.add(msg.msg_type(), &encoded);

    let stage = Stage::Finished;
    let msg = HandshakeMessage::Finished(Finished {
        verify_data: finished_mac(&hs.server_finished_key, &transcript.current_hash()).to_vec(),
    });
    let encoded = encode_own(&msg, stage)?;
    layer.send_handshake(&encoded, stage)?;
    transcript.add(msg.msg_type(), &encoded);
    let server_finished_hash = transcript.current_hash();
    let client_finished_key = hs.client_finished_key;
    let secrets = hs.into_session(&server_finished_hash);
    layer.set_write_keys(traffic_keys(&secrets.server_application_traffic));

    // Client flight
    let mut peer = None;
    if let Some(t) = negotiation.client_cert_type {
        let stage = Stage::ClientCertificate;
        let (encoded, msg) = layer.recv_handshake(stage)?;
        let HandshakeMessage::Certificate(cert) = msg else {
            return Err(fail(Alert::HandshakeFailure, stage, "expected client Certificate"));
        };
        transcript.add(HandshakeType::Certificate, &encoded);
        let (identity, received) =
            authenticate_peer(cfg, t, &cert, &negotiation.shared_did_methods, &mut resolutions)
                .map_err(|a| fail(a.alert, stage, a.reason))?;
        metrics.pk_objects_received += received;

        let stage = Stage::ClientCertificateVerify;
        let (encoded, msg) = layer.recv_handshake(stage)?;
        let HandshakeMessage::CertificateVerify(cv) = msg else {
            return Err(fail(Alert::HandshakeFailure, stage, "expected client CertificateVerify"));
        };
        if !verify_certificate_verify(&identity.public_key, &cv, &transcript.current_hash(), Role::Client) {
            return Err(fail(Alert::DecryptError, stage, "client CertificateVerify does not verify"));
        }
        metrics.pk_objects_received.signatures += cv.signature.len();
        transcript.add(HandshakeType::CertificateVerify, &encoded);
        peer = Some(identity);
    }

    let stage = Stage::ClientFinished;
    let (encoded, msg) = layer.recv_handshake(stage)?;
    let HandshakeMessage::Finished(fin) = msg else {
        return Err(fail(Alert::HandshakeFailure, stage, "expected client Finished"));
    };
    if !verify_finished(&client_finished_key, &transcript.current_hash(), &fin.verify_data) {
        return Err(fail(Alert::DecryptError, stage, "client Finished does not verify"));
    }
    transcript.add(HandshakeType::Finished, &encoded);
    layer.set_read_keys(traffic_keys(&secrets.client_application_traffic));

    if let Some(r) = resolutions.as_ref() {
        metrics.did_resolves = r.count();
        metrics.resolve_time = r.elapsed();
    }
    metrics.bytes_sent = layer.bytes_sent();
    metrics.bytes_received = layer.bytes_received();
    metrics.wall_clock = start.elapsed();
    Ok(EndpointReport {
        role: Role::Server,
        secrets,
        negotiation,
        metrics,
        peer,
        transcript,
    })
}
