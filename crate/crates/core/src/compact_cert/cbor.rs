// Licensed under the Apache-2.0 license

//! Deterministic CBOR subset: unsigned ints, byte and text strings, arrays
//! and maps. Definite lengths only, shortest-form heads, map keys sorted by
//! their encoded bytes. The reader rejects anything else.

use std::collections::BTreeMap;

use thiserror::Error;

const MAJOR_UINT: u8 = 0;
const MAJOR_BYTES: u8 = 2;
const MAJOR_TEXT: u8 = 3;
const MAJOR_ARRAY: u8 = 4;
const MAJOR_MAP: u8 = 5;

pub const MAX_DEPTH: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CborError {
    #[error("malformed encoding at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("non-canonical encoding at byte {offset}: {reason}")]
    NonCanonical { offset: usize, reason: String },
}

impl CborError {
    pub fn offset(&self) -> usize {
        match self {
            CborError::Malformed { offset, .. } | CborError::NonCanonical { offset, .. } => *offset,
        }
    }

    pub(crate) fn malformed(offset: usize, reason: impl Into<String>) -> Self {
        CborError::Malformed {
            offset,
            reason: reason.into(),
        }
    }

    fn non_canonical(offset: usize, reason: impl Into<String>) -> Self {
        CborError::NonCanonical {
            offset,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Default, Clone)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    fn head(&mut self, major: u8, n: u64) -> &mut Self {
        let m = major << 5;
        if n < 24 {
            self.buf.push(m | n as u8);
        } else if n <= 0xff {
            self.buf.extend_from_slice(&[m | 24, n as u8]);
        } else if n <= 0xffff {
            self.buf.push(m | 25);
            self.buf.extend_from_slice(&(n as u16).to_be_bytes());
        } else if n <= 0xffff_ffff {
            self.buf.push(m | 26);
            self.buf.extend_from_slice(&(n as u32).to_be_bytes());
        } else {
            self.buf.push(m | 27);
            self.buf.extend_from_slice(&n.to_be_bytes());
        }
        self
    }

    pub fn uint(&mut self, n: u64) -> &mut Self {
        self.head(MAJOR_UINT, n)
    }

    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.head(MAJOR_BYTES, b.len() as u64);
        self.buf.extend_from_slice(b);
        self
    }

    pub fn text(&mut self, s: &str) -> &mut Self {
        self.head(MAJOR_TEXT, s.len() as u64);
        self.buf.extend_from_slice(s.as_bytes());
        self
    }

    pub fn array(&mut self, len: usize) -> &mut Self {
        self.head(MAJOR_ARRAY, len as u64)
    }

    /// Writes a map from already-encoded keys and values. `BTreeMap` order
    /// on the encoded key bytes is exactly the canonical order.
    pub fn map_encoded(&mut self, entries: &BTreeMap<Vec<u8>, Vec<u8>>) -> &mut Self {
        self.head(MAJOR_MAP, entries.len() as u64);
        for (k, v) in entries {
            self.buf.extend_from_slice(k);
            self.buf.extend_from_slice(v);
        }
        self
    }

    pub fn text_bytes_map<'a, I>(&mut self, entries: I) -> &mut Self
    where
        I: IntoIterator<Item = (&'a str, &'a [u8])>,
    {
        let encoded = entries
            .into_iter()
            .map(|(k, v)| {
                let mut kw = Writer::new();
                kw.text(k);
                let mut vw = Writer::new();
                vw.bytes(v);
                (kw.buf, vw.buf)
            })
            .collect();
        self.map_encoded(&encoded)
    }

    pub fn uint_bytes_map<'a, I>(&mut self, entries: I) -> &mut Self
    where
        I: IntoIterator<Item = (u64, &'a [u8])>,
    {
        let encoded = entries
            .into_iter()
            .map(|(k, v)| {
                let mut kw = Writer::new();
                kw.uint(k);
                let mut vw = Writer::new();
                vw.bytes(v);
                (kw.buf, vw.buf)
            })
            .collect();
        self.map_encoded(&encoded)
    }

    /// Appends a complete, already-canonical item.
    pub fn raw(&mut self, item: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(item);
        self
    }

    pub fn finish(&mut self) -> Vec<u8> {
        std::mem::take(&mut self.buf)
    }
}

/// Strict cursor over a canonical encoding.
#[derive(Debug, Clone)]
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CborError> {
        if n > self.remaining() {
            return Err(CborError::malformed(self.pos, "unexpected end of input"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn peek_major(&self) -> Result<u8, CborError> {
        self.buf
            .get(self.pos)
            .map(|b| b >> 5)
            .ok_or_else(|| CborError::malformed(self.pos, "unexpected end of input"))
    }

    fn head(&mut self) -> Result<(u8, u64, usize), CborError> {
        let start = self.pos;
        let ib = self.take(1)?[0];
        let major = ib >> 5;
        let info = ib & 0x1f;
        let (n, min) = match info {
            0..=23 => (info as u64, 0),
            24 => (self.take(1)?[0] as u64, 24),
            25 => (u16::from_be_bytes(self.take(2)?.try_into().unwrap()) as u64, 0x100),
            26 => (u32::from_be_bytes(self.take(4)?.try_into().unwrap()) as u64, 0x1_0000),
            27 => (
                u64::from_be_bytes(self.take(8)?.try_into().unwrap()),
                0x1_0000_0000,
            ),
            28..=30 => return Err(CborError::malformed(start, "reserved additional info")),
            _ => return Err(CborError::non_canonical(start, "indefinite length")),
        };
        if n < min {
            return Err(CborError::non_canonical(start, "non-minimal integer head"));
        }
        if !matches!(major, MAJOR_UINT | MAJOR_BYTES | MAJOR_TEXT | MAJOR_ARRAY | MAJOR_MAP) {
            return Err(CborError::malformed(start, format!("unsupported major type {major}")));
        }
        Ok((major, n, start))
    }

    fn expect(&mut self, want: u8, what: &str) -> Result<(u64, usize), CborError> {
        let (major, n, start) = self.head()?;
        if major != want {
            return Err(CborError::malformed(start, format!("expected {what}")));
        }
        Ok((n, start))
    }

    pub fn uint(&mut self) -> Result<u64, CborError> {
        Ok(self.expect(MAJOR_UINT, "unsigned integer")?.0)
    }

    fn string(&mut self, major: u8, what: &str) -> Result<&'a [u8], CborError> {
        let (n, start) = self.expect(major, what)?;
        if n > self.remaining() as u64 {
            return Err(CborError::malformed(start, format!("{what} length exceeds input")));
        }
        self.take(n as usize)
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], CborError> {
        self.string(MAJOR_BYTES, "byte string")
    }

    pub fn text(&mut self) -> Result<&'a str, CborError> {
        let start = self.pos;
        let raw = self.string(MAJOR_TEXT, "text string")?;
        std::str::from_utf8(raw).map_err(|_| CborError::malformed(start, "invalid UTF-8"))
    }

    /// Reads an array head. Every item needs at least one byte, which
    /// bounds the claimed length by the remaining input.
    pub fn array(&mut self) -> Result<usize, CborError> {
        let (n, start) = self.expect(MAJOR_ARRAY, "array")?;
        if n > self.remaining() as u64 {
            return Err(CborError::malformed(start, "array length exceeds input"));
        }
        Ok(n as usize)
    }

    pub fn array_of(&mut self, len: usize) -> Result<(), CborError> {
        let start = self.pos;
        let n = self.array()?;
        if n != len {
            return Err(CborError::malformed(
                start,
                format!("expected {len} elements, found {n}"),
            ));
        }
        Ok(())
    }

    pub fn map(&mut self) -> Result<usize, CborError> {
        let (n, start) = self.expect(MAJOR_MAP, "map")?;
        if n.saturating_mul(2) > self.remaining() as u64 {
            return Err(CborError::malformed(start, "map length exceeds input"));
        }
        Ok(n as usize)
    }

    /// Reads one map key with `read` and checks it sorts strictly after the
    /// previous key's encoding.
    pub fn sorted_key<T>(
        &mut self,
        prev: &mut Option<&'a [u8]>,
        read: impl FnOnce(&mut Self) -> Result<T, CborError>,
    ) -> Result<T, CborError> {
        let start = self.pos;
        let value = read(self)?;
        let encoded = &self.buf[start..self.pos];
        if let Some(p) = *prev {
            if encoded == p {
                return Err(CborError::non_canonical(start, "duplicate map key"));
            }
            if encoded < p {
                return Err(CborError::non_canonical(start, "map keys out of order"));
            }
        }
        *prev = Some(encoded);
        Ok(value)
    }

    pub fn text_bytes_map(&mut self) -> Result<BTreeMap<String, Vec<u8>>, CborError> {
        let n = self.map()?;
        let mut prev = None;
        let mut out = BTreeMap::new();
        for _ in 0..n {
            let k = self.sorted_key(&mut prev, |r| r.text())?;
            let v = self.bytes()?;
            out.insert(k.to_string(), v.to_vec());
        }
        Ok(out)
    }

    pub fn uint_bytes_map(&mut self) -> Result<BTreeMap<u64, Vec<u8>>, CborError> {
        let n = self.map()?;
        let mut prev = None;
        let mut out = BTreeMap::new();
        for _ in 0..n {
            let k = self.sorted_key(&mut prev, |r| r.uint())?;
            let v = self.bytes()?;
            out.insert(k, v.to_vec());
        }
        Ok(out)
    }

    /// Skips one complete item, validating it, and returns its raw bytes.
    pub fn item(&mut self) -> Result<&'a [u8], CborError> {
        let start = self.pos;
        self.skip(0)?;
        Ok(&self.buf[start..self.pos])
    }

    fn skip(&mut self, depth: usize) -> Result<(), CborError> {
        if depth > MAX_DEPTH {
            return Err(CborError::malformed(self.pos, "nesting too deep"));
        }
        match self.peek_major()? {
            MAJOR_UINT => {
                self.uint()?;
            }
            MAJOR_BYTES => {
                self.bytes()?;
            }
            MAJOR_TEXT => {
                self.text()?;
            }
            MAJOR_ARRAY => {
                for _ in 0..self.array()? {
                    self.skip(depth + 1)?;
                }
            }
            MAJOR_MAP => {
                let n = self.map()?;
                let mut prev = None;
                for _ in 0..n {
                    self.sorted_key(&mut prev, |r| r.skip(depth + 1))?;
                    self.skip(depth + 1)?;
                }
            }
            _ => {
                // head() reports the unsupported major type
                self.head()?;
            }
        }
        Ok(())
    }

    /// Fails unless the whole input was consumed.
    pub fn finish(&self) -> Result<(), CborError> {
        if self.remaining() != 0 {
            return Err(CborError::malformed(self.pos, "trailing bytes"));
        }
        Ok(())
    }
}
