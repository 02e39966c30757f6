//! Presentation-language primitives: big-endian integers and
//! length-prefixed vectors with declared bounds.

use super::WireError;

/// Appends big-endian fields and bounded vectors to a byte buffer.
#[derive(Debug, Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u16(&mut self, v: u16) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u24(&mut self, v: u32) -> &mut Self {
        debug_assert!(v < 1 << 24);
        self.buf.extend_from_slice(&v.to_be_bytes()[1..]);
        self
    }

    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(b);
        self
    }

    /// Writes `body` behind a `len_bytes`-wide length prefix, checking the
    /// vector bounds `min..=max` (in bytes).
    pub fn vec(
        &mut self,
        field: &'static str,
        len_bytes: usize,
        min: usize,
        max: usize,
        body: &[u8],
    ) -> Result<&mut Self, WireError> {
        if body.len() > max {
            return Err(WireError::FieldTooLong {
                field,
                len: body.len(),
                max,
            });
        }
        if body.len() < min {
            return Err(WireError::VectorBoundViolation {
                field,
                len: body.len(),
            });
        }
        let len = body.len() as u32;
        match len_bytes {
            1 => self.u8(len as u8),
            2 => self.u16(len as u16),
            3 => self.u24(len),
            _ => unreachable!("unsupported length prefix width"),
        };
        self.bytes(body);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Cursor over a borrowed byte slice.
#[derive(Debug, Clone)]
pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.remaining() == 0
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.remaining() < n {
            return Err(WireError::Truncated);
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, WireError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    pub fn u24(&mut self) -> Result<u32, WireError> {
        let b = self.take(3)?;
        Ok(u32::from_be_bytes([0, b[0], b[1], b[2]]))
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], WireError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    /// Reads a length-prefixed vector and checks it against `min..=max`.
    pub fn vec(
        &mut self,
        field: &'static str,
        len_bytes: usize,
        min: usize,
        max: usize,
    ) -> Result<&'a [u8], WireError> {
        let len = match len_bytes {
            1 => self.u8()? as usize,
            2 => self.u16()? as usize,
            3 => self.u24()? as usize,
            _ => unreachable!("unsupported length prefix width"),
        };
        if len < min || len > max {
            return Err(WireError::VectorBoundViolation { field, len });
        }
        self.take(len)
    }

    pub fn expect_end(&self) -> Result<(), WireError> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(WireError::TrailingBytes(self.remaining()))
        }
    }
}
