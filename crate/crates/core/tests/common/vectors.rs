//! A scripted raw-key flight and the oracle's frozen output for it.

use ssitls_core::handshake::{key_schedule, SessionSecrets, Transcript, TranscriptSnapshots};
use ssitls_core::wire::decode_message;

pub fn flatten(s: &SessionSecrets) -> Vec<Vec<u8>> {
    let hs = &s.handshake;
    [
        hs.early_secret,
        hs.handshake_secret,
        hs.client_handshake_traffic,
        hs.server_handshake_traffic,
        hs.client_finished_key,
        hs.server_finished_key,
        s.master_secret,
        s.client_application_traffic,
        s.server_application_traffic,
    ]
    .iter()
    .map(|x| x.to_vec())
    .collect()
}

// A scripted unilateral raw-key flight with fixed randoms and key shares.
pub const SCRIPT: [(&str, &str); 6] = [
    ("client_hello", "010000640303000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f000002130201000039002b0003020304003300260024001d0020202122232425262728292a2b2c2d2e2f303132333435363738393a3b3c3d3e3f000d000400020807"),
    ("server_hello", "020000560303404142434445464748494a4b4c4d4e4f505152535455565758595a5b5c5d5e5f00130200002e002b0002030400330024001d0020606162636465666768696a6b6c6d6e6f707172737475767778797a7b7c7d7e7f"),
    ("encrypted_extensions", "080000020000"),
    ("certificate", "0b00002900000025000020808182838485868788898a8b8c8d8e8f909192939495969798999a9b9c9d9e9f0000"),
    ("certificate_verify", "0f00004408070040a0a1a2a3a4a5a6a7a8a9aaabacadaeafb0b1b2b3b4b5b6b7b8b9babbbcbdbebfc0c1c2c3c4c5c6c7c8c9cacbcccdcecfd0d1d2d3d4d5d6d7d8d9dadbdcdddedf"),
    ("finished", "14000030c0c1c2c3c4c5c6c7c8c9cacbcccdcecfd0d1d2d3d4d5d6d7d8d9dadbdcdddedfe0e1e2e3e4e5e6e7e8e9eaebecedeeef"),
];

// Frozen output of the standalone oracle for SCRIPT with an all-zero
// shared secret.
pub const FROZEN: [&str; 9] = [
    "7ee8206f5570023e6dc7519eb1073bc4e791ad37b5c382aa10ba18e2357e716971f9362f2c2fe2a76bfd78dfec4ea9b5",
    "e80a66b5d08a3318ced2502a04a753fa870597fc65c8d55ef35bbbbe65eca89e291d68b160b74b9ce0ef353785f04406",
    "3ad0e8a65ebfd38798a3e0126e9ab6a24a704634657e148d9c5ea2c351e6222b6f4dbc2c5eb45abb595bb6e69205241b",
    "5f2d500e82261013be811905a6046f71d3ef04d73ae363aac45ee8ef4fc20a0275aac5ec83cd3d5103bdf39261ffaf32",
    "50653c05c7a09ca8d8e2fde1ec9d2d56f16cf8a0d755a9af385810c800f4f25cc1c1f74d8182bc065a0057eed4e08186",
    "9c33e9f1cd4470ab1717280b7b405caf9d721b3c7f3f35f867e340f9b2bf374c8abd780664f05a1979d1111ff181a91a",
    "408c8a4e37d6c0c93d952c109ed52d6fc8b85e086ed2dbaf277e5fe6995450e705153d9a5ec7efa75f04708fa4f8ab1f",
    "e1ebab5b03f1a40c8b3a6040a0baaa9187b9b073cfa498cd74c5f803b0ce85b14f9bd156fafe018b13cc883306fb71d1",
    "4b2e7c37e654d1cd9b8c48716e80ffdbde07e72e0f29fbd814c636e9cef73372a57ef03e6215a8d892d7efba7e706de2",
];
pub const SERVER_HS_KEY: &str = "637f9b7068e1f604566e59b27f7923b1a4f723427b47426e00474773dc8fc8a9";
pub const SERVER_HS_IV: &str = "0332d64069c225c0f6fff6fd";
pub const SERVER_FINISHED_MAC: &str = "d42d5628daf2ebfb22e8dec81a50aa6ab38179864c9957bff4a1d1eb47629c6a6d4a87eca004bb1d892ec2cb141cc0e7";

pub fn scripted() -> Vec<Vec<u8>> {
    SCRIPT.iter().map(|(_, h)| hex::decode(h).unwrap()).collect()
}

/// Feeds the scripted flight through the library transcript and returns the
/// hashes after ServerHello, after CertificateVerify and after Finished.
pub fn scripted_hashes() -> ([u8; 48], [u8; 48], [u8; 48]) {
    let mut t = Transcript::new();
    let mut snaps = Vec::new();
    for m in scripted() {
        let msg = decode_message(&m).expect("scripted messages are well-formed");
        t.add(msg.msg_type(), &m);
        snaps.push(t.current_hash());
    }
    (snaps[1], snaps[4], snaps[5])
}

/// Library-derived secrets for the scripted flight.
pub fn scripted_library_secrets() -> SessionSecrets {
    let (hello, _, fin) = scripted_hashes();
    key_schedule(
        [0; 32],
        TranscriptSnapshots {
            hello: &hello,
            server_finished: &fin,
        },
    )
}
