//! Little-endian framing shared by the model and index file formats.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic bytes {0:?}")]
    BadMagic(Vec<u8>),
    #[error("unsupported format version {0:?}")]
    UnsupportedVersion(String),
    #[error("file truncated while reading {0}")]
    Truncated(&'static str),
    #[error("{0} trailing bytes after the last record")]
    TrailingBytes(usize),
    #[error("invalid UTF-8 in {0}")]
    InvalidUtf8(&'static str),
    #[error("{0}")]
    Invalid(String),
}

/// Checks `bytes` against `family` followed by `version`, reporting the
/// version found when only the version differs.
pub(crate) fn check_magic(
    reader: &mut Reader<'_>,
    family: &[u8],
    version: &[u8],
) -> Result<(), FormatError> {
    let head = reader.take(family.len() + version.len(), "magic")?;
    let (fam, ver) = head.split_at(family.len());
    if fam != family {
        return Err(FormatError::BadMagic(head.to_vec()));
    }
    if ver != version {
        return Err(FormatError::UnsupportedVersion(
            String::from_utf8_lossy(ver).into_owned(),
        ));
    }
    Ok(())
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf }
    }

    pub fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], FormatError> {
        if self.buf.len() < n {
            return Err(FormatError::Truncated(what));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    pub fn u32(&mut self, what: &'static str) -> Result<u32, FormatError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self, what: &'static str) -> Result<u64, FormatError> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub fn string(&mut self, what: &'static str) -> Result<String, FormatError> {
        let len = self.u32(what)? as usize;
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| FormatError::InvalidUtf8(what))
    }

    /// Reads `n` f32 values into `out`.
    pub fn f32s(&mut self, n: usize, out: &mut Vec<f32>, what: &'static str) -> Result<(), FormatError> {
        let bytes = self.take(n.checked_mul(4).ok_or(FormatError::Truncated(what))?, what)?;
        out.extend(
            bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))),
        );
        Ok(())
    }

    pub fn remaining(&self) -> usize {
        self.buf.len()
    }

    pub fn finish(self) -> Result<(), FormatError> {
        match self.buf.len() {
            0 => Ok(()),
            n => Err(FormatError::TrailingBytes(n)),
        }
    }
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, u32::try_from(s.len()).expect("string longer than 4 GiB"));
    out.extend_from_slice(s.as_bytes());
}

pub(crate) fn put_f32s(out: &mut Vec<u8>, values: &[f32]) {
    out.reserve(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}
