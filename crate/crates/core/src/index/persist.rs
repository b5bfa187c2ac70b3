use std::path::Path;

use super::{IndexError, VectorIndex};
use crate::corpus::VerseKey;
use crate::wire::{self, FormatError, Reader};

/// File magic: format family `QSIX` followed by version `01`.
pub const INDEX_MAGIC: &[u8; 6] = b"QSIX01";

impl VectorIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + self.len() * (24 + 4 * self.dim));
        out.extend_from_slice(INDEX_MAGIC);
        wire::put_u32(&mut out, self.dim as u32);
        wire::put_u32(&mut out, self.len() as u32);
        wire::put_str(&mut out, &self.provider);
        for e in self.entries() {
            wire::put_str(&mut out, e.tafsir_id);
            wire::put_u32(&mut out, e.key.encode());
            wire::put_f32s(&mut out, e.vector);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        let mut r = Reader::new(bytes);
        wire::check_magic(&mut r, &INDEX_MAGIC[..4], &INDEX_MAGIC[4..])?;
        let dim = r.u32("dimension")? as usize;
        let count = r.u32("entry count")? as usize;
        let provider = r.string("provider name")?;
        if dim == 0 {
            return Err(FormatError::Invalid("dimension 0".into()).into());
        }
        let mut index = VectorIndex::new(provider, dim)?;
        let mut vector = Vec::with_capacity(dim);
        for i in 0..count {
            let tafsir = r.string("tafsir id")?;
            let raw_key = r.u32("verse key")?;
            let key = VerseKey::decode(raw_key).map_err(|_| {
                FormatError::Invalid(format!("entry {i}: undecodable verse key {raw_key}"))
            })?;
            vector.clear();
            r.f32s(dim, &mut vector, "vector")?;
            index
                .push(&tafsir, key, &vector)
                .map_err(|e| FormatError::Invalid(format!("entry {i}: {e}")))?;
        }
        r.finish()?;
        Ok(index)
    }
}

pub fn persist_index(index: &VectorIndex, path: impl AsRef<Path>) -> Result<(), IndexError> {
    let path = path.as_ref();
    std::fs::write(path, index.to_bytes()).map_err(|source| IndexError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn restore_index(path: impl AsRef<Path>) -> Result<VectorIndex, IndexError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| IndexError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    VectorIndex::from_bytes(&bytes)
}
