use std::io::{Read, Write};
use std::time::Instant;

use rand::RngCore;
use x25519_dalek::{PublicKey as EphemeralPublic, StaticSecret};

use super::auth::authenticate_peer;
use super::run::endpoint_rng;
use super::transport::encode_own;
use super::{
    build_certificate, build_certificate_verify, check_own_did_in_shared, finished_mac,
    traffic_keys, verify_certificate_verify, verify_finished, Alert, Credential, EndpointConfig,
    EndpointReport, Established, FlightMetrics, HandshakeError, HandshakeSecrets,
    NegotiationOutcome, RecordLayer, Resolutions, Role, Stage, Transcript,
};
use crate::wire::{
    certificate_type_list, decode_did_methods, encode_did_methods, find_extension, key_share_client,
    parse_certificate_type_selected, parse_key_share_server, parse_signature_algorithms,
    parse_supported_versions_server, signature_algorithms, supported_versions_client,
    CertificateRequest, CertificateTypeCode, ClientHello, DidMethodList, ExtensionType, Finished,
    HandshakeMessage, HandshakeType, KeyShareEntry, WireError, ED25519, TLS13,
    TLS_AES_256_GCM_SHA384,
};

fn fail(alert: Alert, stage: Stage, reason: impl Into<String>) -> HandshakeError {
    HandshakeError::local(alert, stage, reason)
}

fn decode_err(stage: Stage) -> impl Fn(WireError) -> HandshakeError {
    move |e| fail(Alert::DecodeError, stage, e.to_string())
}

/// Runs the client side of the handshake over `stream`.
pub fn client_handshake<S: Read + Write>(
    cfg: &EndpointConfig,
    stream: S,
) -> Result<Established<S>, HandshakeError> {
    if cfg.role != Role::Client {
        return Err(HandshakeError::Config("client_handshake needs a client config".into()));
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
    let start = Instant::now();
    let mut rng = endpoint_rng(cfg);
    let mut transcript = Transcript::new();
    let mut resolutions = cfg
        .resolver
        .as_deref()
        .map(|ch| Resolutions::new(ch, cfg.cache_resolves));

    // ClientHello
    let mut random = [0u8; 32];
    rng.fill_bytes(&mut random);
    let mut eph = [0u8; 32];
    rng.fill_bytes(&mut eph);
    let eph = StaticSecret::from(eph);
    let eph_pub = EphemeralPublic::from(&eph);

    let stage = Stage::ClientHello;
    let own_err = |e: WireError| fail(Alert::HandshakeFailure, stage, e.to_string());
    let mut extensions = vec![
        supported_versions_client(&[TLS13]).map_err(own_err)?,
        key_share_client(&[KeyShareEntry::x25519(eph_pub.to_bytes())]).map_err(own_err)?,
        signature_algorithms(&[ED25519]).map_err(own_err)?,
    ];
    if cfg.rfc7250_enabled {
        extensions.push(
            certificate_type_list(
                ExtensionType::CLIENT_CERTIFICATE_TYPE,
                &cfg.supported_client_cert_types,
            )
            .map_err(own_err)?,
        );
        extensions.push(
            certificate_type_list(
                ExtensionType::SERVER_CERTIFICATE_TYPE,
                &cfg.supported_server_cert_types,
            )
            .map_err(own_err)?,
        );
        if !cfg.did_methods.is_empty() {
            extensions.push(
                encode_did_methods(&cfg.did_methods, cfg.code_points.did_methods_extension)
                    .map_err(own_err)?,
            );
        }
    }
    let ch = HandshakeMessage::ClientHello(ClientHello {
        random,
        legacy_session_id: Vec::new(),
        cipher_suites: vec![TLS_AES_256_GCM_SHA384],
        extensions,
    });
    let encoded = encode_own(&ch, stage)?;
    layer.send_handshake(&encoded, stage)?;
    transcript.add(ch.msg_type(), &encoded);

    // ServerHello
    let stage = Stage::ServerHello;
    let (encoded, msg) = layer.recv_handshake(stage)?;
    let HandshakeMessage::ServerHello(sh) = msg else {
        return Err(fail(Alert::HandshakeFailure, stage, "expected ServerHello"));
    };
    if sh.cipher_suite != TLS_AES_256_GCM_SHA384 || !sh.legacy_session_id_echo.is_empty() {
        return Err(fail(Alert::HandshakeFailure, stage, "server chose parameters we did not offer"));
    }
    let version = find_extension(&sh.extensions, ExtensionType::SUPPORTED_VERSIONS)
        .map(parse_supported_versions_server)
        .transpose()
        .map_err(decode_err(stage))?;
    if version != Some(TLS13) {
        return Err(fail(Alert::HandshakeFailure, stage, "server did not select TLS 1.3"));
    }
    let share = find_extension(&sh.extensions, ExtensionType::KEY_SHARE)
        .map(parse_key_share_server)
        .transpose()
        .map_err(decode_err(stage))?
        .ok_or_else(|| fail(Alert::DecodeError, stage, "missing key_share"))?;
    let shared = eph.diffie_hellman(&EphemeralPublic::from(share.x25519_public()));
    if !shared.was_contributory() {
        return Err(fail(Alert::HandshakeFailure, stage, "degenerate key share"));
    }
    transcript.add(HandshakeType::ServerHello, &encoded);
    let hs = HandshakeSecrets::derive(shared.to_bytes(), &transcript.current_hash());
    layer.set_read_keys(traffic_keys(&hs.server_handshake_traffic));
    layer.set_write_keys(traffic_keys(&hs.client_handshake_traffic));

    // EncryptedExtensions
    let stage = Stage::EncryptedExtensions;
    let (encoded, msg) = layer.recv_handshake(stage)?;
    let HandshakeMessage::EncryptedExtensions(ee) = msg else {
        return Err(fail(Alert::HandshakeFailure, stage, "expected EncryptedExtensions"));
    };
    transcript.add(HandshakeType::EncryptedExtensions, &encoded);
    let selected = |ext_type| {
        find_extension(&ee.extensions, ext_type)
            .map(parse_certificate_type_selected)
            .transpose()
            .map_err(decode_err(stage))
    };
    let server_sel = selected(ExtensionType::SERVER_CERTIFICATE_TYPE)?;
    let client_sel = selected(ExtensionType::CLIENT_CERTIFICATE_TYPE)?;
    if !cfg.rfc7250_enabled && (server_sel.is_some() || client_sel.is_some()) {
        return Err(fail(Alert::HandshakeFailure, stage, "unsolicited certificate type"));
    }
    let fallback = server_sel.is_none() && client_sel.is_none();
    let server_cert_type = server_sel.unwrap_or(CertificateTypeCode::X509);
    if !cfg.supported_server_cert_types.contains(&server_cert_type) {
        return Err(fail(
            Alert::UnsupportedCertificate,
            stage,
            format!("server authenticates with {server_cert_type}, which we do not accept"),
        ));
    }
    let did_ext = cfg.code_points.did_methods_extension;
    let shared_did_methods = match find_extension(&ee.extensions, did_ext) {
        Some(ext) if cfg.rfc7250_enabled => {
            let list = decode_did_methods(ext, did_ext).map_err(decode_err(stage))?;
            if list.methods().iter().any(|m| !cfg.did_methods.contains(*m)) {
                return Err(fail(Alert::HandshakeFailure, stage, "server listed a method we never offered"));
            }
            list
        }
        _ => DidMethodList::default(),
    };
    if server_cert_type == cfg.vc_code() && shared_did_methods.is_empty() {
        return Err(fail(Alert::HandshakeFailure, stage, "VC selected without shared DID methods"));
    }

    // CertificateRequest or Certificate
    let (mut encoded, mut msg) = layer.recv_handshake(Stage::CertificateRequest)?;
    let mut client_cert_type = None;
    if let HandshakeMessage::CertificateRequest(cr) = &msg {
        let t = check_request(cfg, cr, client_sel, &shared_did_methods)?;
        transcript.add(HandshakeType::CertificateRequest, &encoded);
        client_cert_type = Some(t);
        (encoded, msg) = layer.recv_handshake(Stage::Certificate)?;
    }
    finish(
        cfg,
        layer,
        Flight {
            start,
            transcript,
            metrics: FlightMetrics::default(),
            resolutions: &mut resolutions,
            hs,
            negotiation: NegotiationOutcome {
                client_cert_type,
                server_cert_type,
                shared_did_methods,
                fallback,
            },
        },
        encoded,
        msg,
    )
}

/// Validates a CertificateRequest and returns the type we must answer with.
fn check_request(
    cfg: &EndpointConfig,
    cr: &CertificateRequest,
    client_sel: Option<CertificateTypeCode>,
    shared_did_methods: &DidMethodList,
) -> Result<CertificateTypeCode, HandshakeError> {
    let stage = Stage::CertificateRequest;
    let schemes = find_extension(&cr.extensions, ExtensionType::SIGNATURE_ALGORITHMS)
        .map(parse_signature_algorithms)
        .transpose()
        .map_err(decode_err(stage))?
        .unwrap_or_default();
    if !schemes.contains(&ED25519) || !cr.context.is_empty() {
        return Err(fail(Alert::HandshakeFailure, stage, "unusable CertificateRequest"));
    }
    let in_request = find_extension(&cr.extensions, ExtensionType::CLIENT_CERTIFICATE_TYPE)
        .map(parse_certificate_type_selected)
        .transpose()
        .map_err(decode_err(stage))?;
    if in_request.is_some() && in_request != client_sel {
        return Err(fail(
            Alert::HandshakeFailure,
            stage,
            "CertificateRequest contradicts EncryptedExtensions",
        ));
    }
    let t = client_sel.unwrap_or(CertificateTypeCode::X509);
    let acceptable = if cfg.rfc7250_enabled {
        cfg.supported_client_cert_types.contains(&t)
    } else {
        t == CertificateTypeCode::X509
    };
    if !acceptable {
        return Err(fail(Alert::UnsupportedCertificate, stage, format!("server wants {t} from us")));
    }
    let Some(cred) = cfg.credential_for(t) else {
        return Err(fail(Alert::CertificateRequired, stage, format!("no local {t} credential")));
    };
    if let Credential::Vc(b) = cred {
        check_own_did_in_shared(&b.holder.did, shared_did_methods, &cfg.method_table)
            .map_err(|a| fail(a, stage, "our DID method is not in the shared list"))?;
    }
    Ok(t)
}

struct Flight<'r, 'c> {
    start: Instant,
    transcript: Transcript,
    metrics: FlightMetrics,
    resolutions: &'r mut Option<Resolutions<'c>>,
    hs: HandshakeSecrets,
    negotiation: NegotiationOutcome,
}

/// Server Certificate onwards; `cert_encoded`/`cert_msg` is the message
/// already read after EncryptedExtensions or CertificateRequest.
fn finish<S: Read + Write>(
    cfg: &EndpointConfig,
    layer: &mut RecordLayer<S>,
    mut f: Flight<'_, '_>,
    cert_encoded: Vec<u8>,
    cert_msg: HandshakeMessage,
) -> Result<EndpointReport, HandshakeError> {
    let stage = Stage::Certificate;
    let HandshakeMessage::Certificate(cert) = cert_msg else {
        return Err(fail(Alert::HandshakeFailure, stage, "expected Certificate"));
    };
    f.transcript.add(HandshakeType::Certificate, &cert_encoded);
    let (peer, received) = authenticate_peer(
        cfg,
        f.negotiation.server_cert_type,
        &cert,
        &f.negotiation.shared_did_methods,
        f.resolutions,
    )
    .map_err(|a| fail(a.alert, stage, a.reason))?;
    f.metrics.pk_objects_received += received;

    let stage = Stage::CertificateVerify;
    let (encoded, msg) = layer.recv_handshake(stage)?;
    let HandshakeMessage::CertificateVerify(cv) = msg else {
        return Err(fail(Alert::HandshakeFailure, stage, "expected CertificateVerify"));
    };
    if !verify_certificate_verify(&peer.public_key, &cv, &f.transcript.current_hash(), Role::Server) {
        return Err(fail(Alert::DecryptError, stage, "server CertificateVerify does not verify"));
    }
    f.metrics.pk_objects_received.signatures += cv.signature.len();
    f.transcript.add(HandshakeType::CertificateVerify, &encoded);

    let stage = Stage::Finished;
    let (encoded, msg) = layer.recv_handshake(stage)?;
    let HandshakeMessage::Finished(fin) = msg else {
        return Err(fail(Alert::HandshakeFailure, stage, "expected Finished"));
    };
    if !verify_finished(&f.hs.server_finished_key, &f.transcript.current_hash(), &fin.verify_data) {
        return Err(fail(Alert::DecryptError, stage, "server Finished does not verify"));
    }
    f.transcript.add(HandshakeType::Finished, &encoded);
    let server_finished_hash = f.transcript.current_hash();

    if let Some(t) = f.negotiation.client_cert_type {
        let stage = Stage::ClientCertificate;
        let cred = cfg
            .credential_for(t)
            .expect("checked when the CertificateRequest arrived");
        let (cert, sent) = build_certificate(cred, t, &cfg.code_points)
            .map_err(|e| fail(Alert::HandshakeFailure, stage, e.to_string()))?;
        let msg = HandshakeMessage::Certificate(cert);
        let encoded = encode_own(&msg, stage)?;
        layer.send_handshake(&encoded, stage)?;
        f.transcript.add(msg.msg_type(), &encoded);
        f.metrics.pk_objects_sent += sent;

        let stage = Stage::ClientCertificateVerify;
        let cv = build_certificate_verify(cred.signing_key(), &f.transcript.current_hash(), Role::Client);
        f.metrics.pk_objects_sent.signatures += cv.signature.len();
        let msg = HandshakeMessage::CertificateVerify(cv);
        let encoded = encode_own(&msg, stage)?;
        layer.send_handshake(&encoded, stage)?;
        f.transcript.add(msg.msg_type(), &encoded);
    }

    let stage = Stage::ClientFinished;
    let msg = HandshakeMessage::Finished(Finished {
        verify_data: finished_mac(&f.hs.client_finished_key, &f.transcript.current_hash()).to_vec(),
    });
    let encoded = encode_own(&msg, stage)?;
    layer.send_handshake(&encoded, stage)?;
    f.transcript.add(msg.msg_type(), &encoded);

    let secrets = f.hs.into_session(&server_finished_hash);
    layer.set_write_keys(traffic_keys(&secrets.client_application_traffic));
    layer.set_read_keys(traffic_keys(&secrets.server_application_traffic));

    if let Some(r) = f.resolutions.as_ref() {
        f.metrics.did_resolves = r.count();
        f.metrics.resolve_time = r.elapsed();
    }
    f.metrics.bytes_sent = layer.bytes_sent();
    f.metrics.bytes_received = layer.bytes_received();
    f.metrics.wall_clock = f.start.elapsed();
    Ok(EndpointReport {
        role: Role::Client,
        secrets,
        negotiation: f.negotiation,
        metrics: f.metrics,
        peer: Some(peer),
        transcript: f.transcript,
    })
}
