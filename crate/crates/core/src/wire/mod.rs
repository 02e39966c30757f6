//! Bit-exact encoding of handshake messages, extensions and protected
//! records.
//!
//! Everything here follows the TLS presentation language: big-endian
//! integers and vectors prefixed by a length field whose width is fixed by
//! the vector's declared upper bound. Encoding is deterministic and
//! decoding rejects anything that is not in the image of the encoder.

pub mod codec;
mod did_methods;
mod extension;
mod message;
mod record;

pub use did_methods::*;
pub use extension::*;
pub use message::*;
pub use record::*;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("field `{field}` is {len} bytes, exceeding its bound of {max}")]
    FieldTooLong {
        field: &'static str,
        len: usize,
        max: usize,
    },
    #[error("input truncated")]
    Truncated,
    #[error("unknown handshake message type {0}")]
    UnknownMessageType(u8),
    #[error("vector `{field}` has length {len}, outside its declared bounds")]
    VectorBoundViolation { field: &'static str, len: usize },
    #[error("{0} trailing bytes after message")]
    TrailingBytes(usize),
    #[error("mandatory extension {0} missing")]
    MissingMandatoryExtension(u16),
    #[error("extension {0} appears more than once")]
    DuplicateExtension(u16),
    #[error("unexpected value in `{0}`")]
    UnexpectedValue(&'static str),
    #[error("unsupported {what} code point {value:#06x}")]
    UnsupportedCodePoint { what: &'static str, value: u32 },
    #[error("extension type {found} is not {expected}")]
    WrongExtensionType { expected: u16, found: u16 },
    #[error("did_methods list is empty")]
    EmptyList,
    #[error("did_methods vector has odd length")]
    OddLength,
    #[error("vector length prefix disagrees with extension data length")]
    LengthMismatch,
    #[error("record payload of {0} bytes exceeds 2^14")]
    PayloadTooLarge(usize),
    #[error("record authentication failed")]
    AuthTagMismatch,
    #[error("record sequence number exhausted")]
    SequenceExhausted,
    #[error("unknown record content type {0}")]
    UnknownContentType(u8),
}
