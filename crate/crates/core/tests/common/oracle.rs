//! HKDF-SHA-384 written out from the HMAC and extract/expand definitions,
//! sharing no code with the library.

use sha2::{Digest, Sha384};

const BLOCK: usize = 128;

fn h(parts: &[&[u8]]) -> Vec<u8> {
    let mut d = Sha384::new();
    for p in parts {
        d.update(p);
    }
    d.finalize().to_vec()
}

pub fn hash(m: &[u8]) -> Vec<u8> {
    h(&[m])
}

pub fn hmac(key: &[u8], msg: &[u8]) -> Vec<u8> {
    let mut k = if key.len() > BLOCK { hash(key) } else { key.to_vec() };
    k.resize(BLOCK, 0);
    let ipad: Vec<u8> = k.iter().map(|b| b ^ 0x36).collect();
    let opad: Vec<u8> = k.iter().map(|b| b ^ 0x5c).collect();
    h(&[&opad, &h(&[&ipad, msg])])
}

pub fn extract(salt: &[u8], ikm: &[u8]) -> Vec<u8> {
    hmac(salt, ikm)
}

pub fn expand(prk: &[u8], info: &[u8], n: usize) -> Vec<u8> {
    let (mut out, mut t) = (Vec::new(), Vec::new());
    let mut i = 1u8;
    while out.len() < n {
        t = hmac(prk, &[&t[..], info, &[i]].concat());
        out.extend_from_slice(&t);
        i += 1;
    }
    out.truncate(n);
    out
}

pub fn label(secret: &[u8], label: &str, ctx: &[u8], n: usize) -> Vec<u8> {
    let full = format!("tls13 {label}");
    let mut info = (n as u16).to_be_bytes().to_vec();
    info.push(full.len() as u8);
    info.extend_from_slice(full.as_bytes());
    info.push(ctx.len() as u8);
    info.extend_from_slice(ctx);
    expand(secret, &info, n)
}

pub fn derive(secret: &[u8], l: &str, transcript_hash: &[u8]) -> Vec<u8> {
    label(secret, l, transcript_hash, 48)
}

/// Every secret of the schedule, in the order they are listed below.
pub fn schedule(shared: &[u8], hello_hash: &[u8], server_finished_hash: &[u8]) -> Vec<Vec<u8>> {
    let early = extract(&[0], &[0; 48]);
    let hs = extract(&derive(&early, "derived", &hash(b"")), shared);
    let chs = derive(&hs, "c hs traffic", hello_hash);
    let shs = derive(&hs, "s hs traffic", hello_hash);
    let ms = extract(&derive(&hs, "derived", &hash(b"")), &[0; 48]);
    vec![
        early,
        hs.clone(),
        chs.clone(),
        shs.clone(),
        label(&chs, "finished", b"", 48),
        label(&shs, "finished", b"", 48),
        ms.clone(),
        derive(&ms, "c ap traffic", server_finished_hash),
        derive(&ms, "s ap traffic", server_finished_hash),
    ]
}
