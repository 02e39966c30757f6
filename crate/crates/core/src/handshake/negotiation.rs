use super::{Alert, EndpointConfig};
use crate::identity::Did;
use crate::wire::{CertificateTypeCode, DidMethodList, DidMethodRegistry};

/// What the client put in its ClientHello, `None` for absent extensions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClientOffers {
    pub client_cert_types: Option<Vec<CertificateTypeCode>>,
    pub server_cert_types: Option<Vec<CertificateTypeCode>>,
    pub did_methods: Option<DidMethodList>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegotiationOutcome {
    /// `None` when the server does not request client authentication.
    pub client_cert_type: Option<CertificateTypeCode>,
    pub server_cert_type: CertificateTypeCode,
    pub shared_did_methods: DidMethodList,
    pub fallback: bool,
}

impl NegotiationOutcome {
    pub fn uses(&self, t: CertificateTypeCode) -> bool {
        self.server_cert_type == t || self.client_cert_type == Some(t)
    }
}

fn pick(
    offered: Option<&[CertificateTypeCode]>,
    supported: &[CertificateTypeCode],
) -> Result<CertificateTypeCode, Alert> {
    match offered {
        // An absent extension means X.509 only.
        None => supported
            .contains(&CertificateTypeCode::X509)
            .then_some(CertificateTypeCode::X509),
        Some(list) => list.iter().copied().find(|t| supported.contains(t)),
    }
    .ok_or(Alert::UnsupportedCertificate)
}

/// Server-side certificate-type selection: the first type in the client's
/// list the server supports, per direction.
pub fn negotiate_cert_types(
    offers: &ClientOffers,
    server: &EndpointConfig,
) -> Result<NegotiationOutcome, Alert> {
    let no_extensions = offers.client_cert_types.is_none() && offers.server_cert_types.is_none();
    if !server.rfc7250_enabled || no_extensions {
        return Ok(NegotiationOutcome {
            client_cert_type: server
                .request_client_auth
                .then_some(CertificateTypeCode::X509),
            server_cert_type: CertificateTypeCode::X509,
            shared_did_methods: DidMethodList::default(),
            fallback: true,
        });
    }
    let server_cert_type = pick(
        offers.server_cert_types.as_deref(),
        &server.supported_server_cert_types,
    )?;
    let client_cert_type = if server.request_client_auth {
        Some(pick(
            offers.client_cert_types.as_deref(),
            &server.supported_client_cert_types,
        )?)
    } else {
        None
    };
    Ok(NegotiationOutcome {
        client_cert_type,
        server_cert_type,
        shared_did_methods: DidMethodList::default(),
        fallback: false,
    })
}

/// Intersection in client order. With `vc_selected` an empty result aborts,
/// whichever direction VC was selected for.
pub fn negotiate_did_methods(
    client: &DidMethodList,
    server: &DidMethodList,
    vc_selected: bool,
) -> Result<DidMethodList, Alert> {
    let shared = client.intersect(server);
    if vc_selected && shared.is_empty() {
        return Err(Alert::HandshakeFailure);
    }
    Ok(shared)
}

/// The must-abort rule for the endpoint presenting a VC.
pub fn check_own_did_in_shared(
    did: &Did,
    shared: &DidMethodList,
    table: &DidMethodRegistry,
) -> Result<(), Alert> {
    match table.code_of(did.method()) {
        Some(code) if shared.contains(code) => Ok(()),
        _ => Err(Alert::HandshakeFailure),
    }
}
