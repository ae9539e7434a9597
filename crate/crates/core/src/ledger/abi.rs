// SPDX-License-Identifier: Apache-2.0

//! Length-prefixed little-endian argument encoding. Call arguments start with
//! a version byte; storage values use the same encoding without it.

use super::account::Address;

pub const ABI_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AbiError {
    #[error("unexpected end of input")]
    Truncated,
    #[error("unsupported ABI version {0}")]
    Version(u8),
    #[error("{0} trailing bytes")]
    Trailing(usize),
    #[error("invalid {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Default, Clone)]
pub struct AbiWriter {
    buf: Vec<u8>,
}

impl AbiWriter {
    /// Writer for call arguments.
    pub fn new() -> Self {
        AbiWriter { buf: vec![ABI_VERSION] }
    }

    /// Writer for stored values.
    pub fn raw() -> Self {
        AbiWriter { buf: Vec::new() }
    }

    pub fn u8(mut self, v: u8) -> Self {
        self.buf.push(v);
        self
    }

    pub fn bool(self, v: bool) -> Self {
        self.u8(v as u8)
    }

    pub fn u32(mut self, v: u32) -> Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn u64(mut self, v: u64) -> Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn i64(mut self, v: i64) -> Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn len(self, n: usize) -> Self {
        self.u32(u32::try_from(n).expect("ABI lengths fit in u32"))
    }

    pub fn bytes(self, b: &[u8]) -> Self {
        let mut w = self.len(b.len());
        w.buf.extend_from_slice(b);
        w
    }

    pub fn str(self, s: &str) -> Self {
        self.bytes(s.as_bytes())
    }

    pub fn fixed(mut self, b: &[u8]) -> Self {
        self.buf.extend_from_slice(b);
        self
    }

    pub fn address(self, a: &Address) -> Self {
        self.fixed(&a.0)
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct AbiReader<'a> {
    buf: &'a [u8],
}

impl<'a> AbiReader<'a> {
    /// Reader for call arguments; checks the version byte.
    pub fn new(args: &'a [u8]) -> Result<Self, AbiError> {
        match args.split_first() {
            Some((&ABI_VERSION, rest)) => Ok(AbiReader { buf: rest }),
            Some((&v, _)) => Err(AbiError::Version(v)),
            None => Err(AbiError::Truncated),
        }
    }

    pub fn raw(bytes: &'a [u8]) -> Self {
        AbiReader { buf: bytes }
    }

    pub fn fixed(&mut self, n: usize) -> Result<&'a [u8], AbiError> {
        if self.buf.len() < n {
            return Err(AbiError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub fn u8(&mut self) -> Result<u8, AbiError> {
        Ok(self.fixed(1)?[0])
    }

    pub fn bool(&mut self) -> Result<bool, AbiError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(AbiError::Invalid("bool")),
        }
    }

    pub fn u32(&mut self) -> Result<u32, AbiError> {
        Ok(u32::from_le_bytes(self.fixed(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64, AbiError> {
        Ok(u64::from_le_bytes(self.fixed(8)?.try_into().expect("8 bytes")))
    }

    pub fn i64(&mut self) -> Result<i64, AbiError> {
        Ok(i64::from_le_bytes(self.fixed(8)?.try_into().expect("8 bytes")))
    }

    /// A length prefix, sanity-checked against the remaining input so that
    /// corrupt lengths cannot trigger huge allocations.
    pub fn len(&mut self) -> Result<usize, AbiError> {
        let n = self.u32()? as usize;
        if n > self.buf.len() {
            return Err(AbiError::Truncated);
        }
        Ok(n)
    }

    /// A list count; each element occupies at least one byte.
    pub fn count(&mut self) -> Result<usize, AbiError> {
        self.len()
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], AbiError> {
        let n = self.len()?;
        self.fixed(n)
    }

    pub fn str(&mut self) -> Result<&'a str, AbiError> {
        std::str::from_utf8(self.bytes()?).map_err(|_| AbiError::Invalid("UTF-8 string"))
    }

    pub fn string(&mut self) -> Result<String, AbiError> {
        self.str().map(str::to_string)
    }

    pub fn address(&mut self) -> Result<Address, AbiError> {
        Ok(Address(self.fixed(20)?.try_into().expect("20 bytes")))
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn finish(self) -> Result<(), AbiError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(AbiError::Trailing(self.buf.len()))
        }
    }
}
