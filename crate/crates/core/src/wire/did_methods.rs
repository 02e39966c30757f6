use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::codec::{Reader, Writer};
use super::{Extension, WireError};

/// Integer code standing in for a DID method name on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DidMethodCode(pub u16);

impl fmt::Display for DidMethodCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Ordered, duplicate-free list of DID method codes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct DidMethodList {
    methods: Vec<DidMethodCode>,
}

impl DidMethodList {
    /// Builds a list, dropping later duplicates.
    pub fn new(codes: impl IntoIterator<Item = DidMethodCode>) -> Self {
        let mut methods: Vec<DidMethodCode> = Vec::new();
        for c in codes {
            if !methods.contains(&c) {
                methods.push(c);
            }
        }
        Self { methods }
    }

    pub fn from_codes(codes: &[u16]) -> Self {
        Self::new(codes.iter().copied().map(DidMethodCode))
    }

    pub fn methods(&self) -> &[DidMethodCode] {
        &self.methods
    }

    pub fn len(&self) -> usize {
        self.methods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.methods.is_empty()
    }

    pub fn contains(&self, code: DidMethodCode) -> bool {
        self.methods.contains(&code)
    }

    /// Members of `self` that also appear in `other`, in `self`'s order.
    pub fn intersect(&self, other: &DidMethodList) -> DidMethodList {
        Self {
            methods: self
                .methods
                .iter()
                .copied()
                .filter(|c| other.contains(*c))
                .collect(),
        }
    }
}

pub const MAX_DID_METHODS: usize = 32767;

pub fn encode_did_methods(
    list: &DidMethodList,
    extension_type: u16,
) -> Result<Extension, WireError> {
    if list.is_empty() {
        return Err(WireError::EmptyList);
    }
    let body: Vec<u8> = list.methods.iter().flat_map(|c| c.0.to_be_bytes()).collect();
    let mut w = Writer::new();
    w.vec("did_methods", 2, 2, 0xfffe, &body)?;
    Ok(Extension::new(extension_type, w.finish()))
}

pub fn decode_did_methods(ext: &Extension, extension_type: u16) -> Result<DidMethodList, WireError> {
    if ext.extension_type != extension_type {
        return Err(WireError::WrongExtensionType {
            expected: extension_type,
            found: ext.extension_type,
        });
    }
    let data = &ext.extension_data;
    let mut r = Reader::new(data);
    let declared = r.u16().map_err(|_| WireError::LengthMismatch)? as usize;
    if !declared.is_multiple_of(2) {
        return Err(WireError::OddLength);
    }
    if declared == 0 {
        return Err(WireError::EmptyList);
    }
    if declared != r.remaining() {
        return Err(WireError::LengthMismatch);
    }
    let body = r.take(declared)?;
    Ok(DidMethodList::new(
        body.chunks_exact(2)
            .map(|c| DidMethodCode(u16::from_be_bytes([c[0], c[1]]))),
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MethodTableError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Bidirectional map between DID method names and their wire codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DidMethodRegistry {
    by_code: BTreeMap<u16, String>,
}

impl Default for DidMethodRegistry {
    fn default() -> Self {
        let by_code = [(0, "iota"), (1, "key"), (2, "web"), (3, "example")]
            .into_iter()
            .map(|(c, n)| (c, n.to_string()))
            .collect();
        Self { by_code }
    }
}

impl DidMethodRegistry {
    /// Parses `code = name` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, MethodTableError> {
        let mut by_code = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |reason: &str| MethodTableError::Parse {
                line: line_no,
                reason: reason.to_string(),
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (code, name) = line.split_once('=').ok_or_else(|| err("expected `code = name`"))?;
            let code: u16 = code.trim().parse().map_err(|_| err("code is not a u16"))?;
            let name = name.trim();
            if !is_method_name(name) {
                return Err(err("method name must be non-empty lowercase alphanumeric"));
            }
            if by_code.values().any(|n: &String| n == name) {
                return Err(err("duplicate method name"));
            }
            if by_code.insert(code, name.to_string()).is_some() {
                return Err(err("duplicate code"));
            }
        }
        Ok(Self { by_code })
    }

    pub fn code_of(&self, name: &str) -> Option<DidMethodCode> {
        self.by_code
            .iter()
            .find(|(_, n)| n.as_str() == name)
            .map(|(&c, _)| DidMethodCode(c))
    }

    pub fn name_of(&self, code: DidMethodCode) -> Option<&str> {
        self.by_code.get(&code.0).map(String::as_str)
    }

    pub fn list_for(&self, names: &[&str]) -> Option<DidMethodList> {
        names
            .iter()
            .map(|n| self.code_of(n))
            .collect::<Option<Vec<_>>>()
            .map(DidMethodList::new)
    }
}

pub fn is_method_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: u16 = ExtensionTypeForTests::DID;
    struct ExtensionTypeForTests;
    impl ExtensionTypeForTests {
        const DID: u16 = crate::wire::ExtensionType::DID_METHODS;
    }

    fn ext(data: &[u8]) -> Extension {
        Extension::new(T, data.to_vec())
    }

    #[test]
    fn encodes_single_and_pair() {
        let e = encode_did_methods(&DidMethodList::from_codes(&[0]), T).unwrap();
        assert_eq!(e.extension_data, [0x00, 0x02, 0x00, 0x00]);
        assert_eq!(e.extension_type, 65280);
        let e = encode_did_methods(&DidMethodList::from_codes(&[0, 2]), T).unwrap();
        assert_eq!(e.extension_data, [0x00, 0x04, 0x00, 0x00, 0x00, 0x02]);
    }

    #[test]
    fn empty_list_rejected() {
        assert_eq!(
            encode_did_methods(&DidMethodList::default(), T),
            Err(WireError::EmptyList)
        );
        assert_eq!(decode_did_methods(&ext(&[0, 0]), T), Err(WireError::EmptyList));
    }

    #[test]
    fn decode_cases() {
        assert_eq!(
            decode_did_methods(&ext(&[0, 4, 0, 0, 0, 2]), T).unwrap(),
            DidMethodList::from_codes(&[0, 2])
        );
        assert_eq!(
            decode_did_methods(&ext(&[0, 3, 0, 0, 1]), T),
            Err(WireError::OddLength)
        );
        assert_eq!(
            decode_did_methods(&ext(&[0, 4, 0, 0, 0, 0]), T).unwrap(),
            DidMethodList::from_codes(&[0])
        );
        assert_eq!(
            decode_did_methods(&ext(&[0, 4, 0, 0]), T),
            Err(WireError::LengthMismatch)
        );
        assert_eq!(
            decode_did_methods(&ext(&[0, 2, 0, 1, 0, 0]), T),
            Err(WireError::LengthMismatch)
        );
        assert_eq!(decode_did_methods(&ext(&[0]), T), Err(WireError::LengthMismatch));
        assert!(matches!(
            decode_did_methods(&Extension::new(19, vec![0, 2, 0, 0]), T),
            Err(WireError::WrongExtensionType { .. })
        ));
    }

    #[test]
    fn oversized_list_rejected() {
        let list = DidMethodList::new((0..=MAX_DID_METHODS as u16).map(DidMethodCode));
        assert_eq!(list.len(), MAX_DID_METHODS + 1);
        assert!(matches!(
            encode_did_methods(&list, T),
            Err(WireError::FieldTooLong { .. })
        ));
        let max = DidMethodList::new((0..MAX_DID_METHODS as u16).map(DidMethodCode));
        let e = encode_did_methods(&max, T).unwrap();
        assert_eq!(e.extension_data.len(), 2 + 65534);
    }

    #[test]
    fn intersection_keeps_left_order() {
        let c = DidMethodList::from_codes(&[0, 1, 2]);
        let s = DidMethodList::from_codes(&[2, 1]);
        assert_eq!(c.intersect(&s), DidMethodList::from_codes(&[1, 2]));
        let c = DidMethodList::from_codes(&[0, 2]);
        let s = DidMethodList::from_codes(&[2, 3]);
        assert_eq!(c.intersect(&s), DidMethodList::from_codes(&[2]));
    }

    #[test]
    fn registry_table() {
        let reg = DidMethodRegistry::default();
        assert_eq!(reg.code_of("iota"), Some(DidMethodCode(0)));
        assert_eq!(reg.name_of(DidMethodCode(2)), Some("web"));
        assert_eq!(reg.name_of(DidMethodCode(999)), None);

        let parsed = DidMethodRegistry::parse("# table\n0 = iota\n1=key\n\n2 = web # comment\n3 = example\n").unwrap();
        assert_eq!(parsed, reg);

        let err = DidMethodRegistry::parse("0 = iota\n0 = web\n").unwrap_err();
        assert_eq!(
            err,
            MethodTableError::Parse {
                line: 2,
                reason: "duplicate code".into()
            }
        );
        assert!(DidMethodRegistry::parse("x = iota").is_err());
        assert!(DidMethodRegistry::parse("4 = Iota").is_err());
        assert!(DidMethodRegistry::parse("4 iota").is_err());
    }
}
