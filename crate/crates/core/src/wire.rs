//! Big-endian, length-prefixed binary encoding shared by every wire message.

use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("unexpected end of input at offset {0}")]
    Truncated(usize),
    #[error("integer of {len} bytes does not fit field width {width}")]
    Overflow { len: usize, width: usize },
    #[error("unknown message tag 0x{0:02x}")]
    UnknownTag(u8),
    #[error("invalid field: {0}")]
    Invalid(String),
    #[error("{0} trailing bytes")]
    Trailing(usize),
}

/// Bytes needed to hold a value of `bits` bits.
pub fn byte_width(bits: u64) -> usize {
    bits.div_ceil(8) as usize
}

/// Big-endian bytes of `x`, left-padded to exactly `width`.
pub fn biguint_to_fixed(x: &BigUint, width: usize) -> Result<Vec<u8>, WireError> {
    let raw = if x.bits() == 0 { Vec::new() } else { x.to_bytes_be() };
    if raw.len() > width {
        return Err(WireError::Overflow { len: raw.len(), width });
    }
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    Ok(out)
}

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

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn raw(&mut self, bytes: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(bytes);
        self
    }

    /// `u16` length followed by the bytes.
    pub fn bytes(&mut self, bytes: &[u8]) -> &mut Self {
        self.u16(bytes.len() as u16);
        self.raw(bytes)
    }

    /// A big integer as a length-prefixed fixed-width field.
    pub fn biguint(&mut self, x: &BigUint, width: usize) -> Result<&mut Self, WireError> {
        let fixed = biguint_to_fixed(x, width)?;
        Ok(self.bytes(&fixed))
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn take(&mut self, len: usize) -> Result<&'a [u8], WireError> {
        let end = self.pos.checked_add(len).ok_or(WireError::Truncated(self.pos))?;
        if end > self.buf.len() {
            return Err(WireError::Truncated(self.pos));
        }
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], WireError> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    pub fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_be_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], WireError> {
        let len = self.u16()? as usize;
        self.take(len)
    }

    /// Returns the value and the field width it was encoded at.
    pub fn biguint(&mut self) -> Result<(BigUint, usize), WireError> {
        let b = self.bytes()?;
        Ok((BigUint::from_bytes_be(b), b.len()))
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn finish(self) -> Result<(), WireError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(WireError::Trailing(n)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_width_padding() {
        let x = BigUint::from(0x1234u32);
        assert_eq!(biguint_to_fixed(&x, 4).unwrap(), vec![0, 0, 0x12, 0x34]);
        assert_eq!(biguint_to_fixed(&BigUint::from(0u8), 2).unwrap(), vec![0, 0]);
        assert_eq!(biguint_to_fixed(&x, 1), Err(WireError::Overflow { len: 2, width: 1 }));
        assert_eq!(byte_width(2048), 256);
        assert_eq!(byte_width(15), 2);
    }

    #[test]
    fn reader_detects_truncation() {
        let mut w = Writer::new();
        w.u32(7).bytes(b"abc");
        let buf = w.finish();
        let mut r = Reader::new(&buf[..5]);
        assert_eq!(r.u32().unwrap(), 7);
        assert!(matches!(r.bytes(), Err(WireError::Truncated(_))));
    }
}
