mod common;

use common::codec::*;
use proptest::prelude::*;
use ssitls_core::identity::{decode_chain_pem, encode_chain_pem, make_chain, ChainCertificate, Validity};
use ssitls_core::wire::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 10_000, ..ProptestConfig::default() })]

    #[test]
    fn handshake_messages_round_trip(msg in message()) {
        check_message(&msg).map_err(TestCaseError::fail)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1_000, ..ProptestConfig::default() })]

    #[test]
    fn credentials_round_trip_and_resist_mutation(case in credential_case()) {
        check_credential(&case).map_err(TestCaseError::fail)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn chains_round_trip(seed in any::<[u8; 32]>(), days in 1i64..1000) {
        let validity = Validity::days_from(fixed_now(), days);
        let bundle = make_chain(["Root", "Intermediate", "leaf.example"], validity, Some(&seed)).unwrap();
        for cert in &bundle.chain {
            let bytes = cert.to_bytes();
            let back = ChainCertificate::from_bytes(&bytes).unwrap();
            prop_assert_eq!(back.to_bytes(), bytes);
        }
        let pem = encode_chain_pem(&bundle.chain);
        prop_assert_eq!(encode_chain_pem(&decode_chain_pem(&pem).unwrap()), pem);
    }

    #[test]
    fn extension_payloads_round_trip(types in cert_types(), methods in did_methods(), t in any::<u8>()) {
        let ext = certificate_type_list(ExtensionType::SERVER_CERTIFICATE_TYPE, &types).unwrap();
        prop_assert_eq!(parse_certificate_type_list(&ext).unwrap(), types);
        let sel = certificate_type_selected(ExtensionType::CLIENT_CERTIFICATE_TYPE, CertificateTypeCode(t));
        prop_assert_eq!(parse_certificate_type_selected(&sel).unwrap(), CertificateTypeCode(t));
        let ext = encode_did_methods(&methods, ExtensionType::DID_METHODS).unwrap();
        prop_assert_eq!(decode_did_methods(&ext, ExtensionType::DID_METHODS).unwrap(), methods);
    }
}
