//! Exact cosine-similarity index over document vectors keyed by
//! (tafsir id, verse key).

mod build;
mod engine;
mod persist;

use std::cmp::Ordering;
use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::VerseKey;
use crate::embedding::{DocVector, EmbedError, EmbeddingProvider};
use crate::wire::FormatError;

pub use build::{build_index, BuildReport};
pub use engine::{CommentaryStore, Hit, SearchEngine, EXCERPT_CHARS};
pub use persist::{persist_index, restore_index, INDEX_MAGIC};

/// Default number of hits returned by a search.
pub const DEFAULT_K: usize = 10;

/// Stored vectors must have unit norm within this tolerance.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("{0}")]
    Domain(String),
    #[error("index build failed: {0}")]
    Build(String),
    #[error("no searchable terms in the query")]
    NoSearchableTerms,
    #[error("unknown tafsir {0:?}")]
    UnknownTafsir(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("index was built with provider {index:?} but the query uses {query:?}")]
    ProviderMismatch { index: String, query: String },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("index file: {0}")]
    Format(#[from] FormatError),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum()
}

fn cosine_from_parts(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    (dot / (norm_a * norm_b)).clamp(-1.0, 1.0)
}

/// `a·b / (‖a‖‖b‖)`, accumulated in f64 and clamped to [-1, 1].
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f64, IndexError> {
    if a.len() != b.len() {
        return Err(IndexError::Domain(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(IndexError::Domain("cosine similarity of a zero vector".into()));
    }
    Ok(cosine_from_parts(dot(a, b), na, nb))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RowMeta {
    tafsir: u32,
    key: VerseKey,
}

/// A search result before verse text is attached: the entry's position in
/// the index and its score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ranked {
    pub row: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryRef<'a> {
    pub tafsir_id: &'a str,
    pub key: VerseKey,
    pub vector: &'a [f32],
}

/// Unit-norm vectors in alignment order, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    provider: String,
    dim: usize,
    tafsirs: Vec<String>,
    rows: Vec<RowMeta>,
    data: Vec<f32>,
    norms: Vec<f64>,
}

impl VectorIndex {
    pub fn new(provider: impl Into<String>, dim: usize) -> Result<Self, IndexError> {
        if dim == 0 {
            return Err(IndexError::Domain("index dimension must be at least 1".into()));
        }
        Ok(VectorIndex {
            provider: provider.into(),
            dim,
            tafsirs: Vec::new(),
            rows: Vec::new(),
            data: Vec::new(),
            norms: Vec::new(),
        })
    }

    /// Appends an entry. The vector must match the index dimension, be
    /// finite, and have unit norm.
    pub fn push(&mut self, tafsir_id: &str, key: VerseKey, vector: &[f32]) -> Result<(), IndexError> {
        if vector.len() != self.dim {
            return Err(IndexError::Domain(format!(
                "vector has {} components, index dimension is {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(IndexError::Domain(format!("non-finite vector for {tafsir_id} {key}")));
        }
        let n = norm(vector);
        if (n - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(IndexError::Domain(format!(
                "vector for {tafsir_id} {key} has norm {n}, expected 1"
            )));
        }
        let tafsir = match self.tafsirs.iter().position(|t| t == tafsir_id) {
            Some(i) => i,
            None => {
                self.tafsirs.push(tafsir_id.to_string());
                self.tafsirs.len() - 1
            }
        };
        self.rows.push(RowMeta {
            tafsir: tafsir as u32,
            key,
        });
        self.data.extend_from_slice(vector);
        self.norms.push(n);
        Ok(())
    }

    pub fn provider_name(&self) -> &str {
        &self.provider
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Tafsir ids in first-appearance order.
    pub fn tafsir_ids(&self) -> &[String] {
        &self.tafsirs
    }

    /// Entry count per tafsir, in first-appearance order.
    pub fn counts_by_tafsir(&self) -> Vec<(&str, usize)> {
        let mut counts = vec![0usize; self.tafsirs.len()];
        for r in &self.rows {
            counts[r.tafsir as usize] += 1;
        }
        self.tafsirs.iter().map(String::as_str).zip(counts).collect()
    }

    pub fn entry(&self, row: usize) -> EntryRef<'_> {
        let meta = self.rows[row];
        EntryRef {
            tafsir_id: &self.tafsirs[meta.tafsir as usize],
            key: meta.key,
            vector: &self.data[row * self.dim..(row + 1) * self.dim],
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = EntryRef<'_>> {
        (0..self.len()).map(|i| self.entry(i))
    }

    /// Hit order: descending score, then ascending verse key, then tafsir
    /// id, then row position.
    pub fn compare_ranked(&self, a: &Ranked, b: &Ranked) -> Ordering {
        let (ma, mb) = (self.rows[a.row], self.rows[b.row]);
        b.score
            .total_cmp(&a.score)
            .then_with(|| ma.key.cmp(&mb.key))
            .then_with(|| {
                self.tafsirs[ma.tafsir as usize].cmp(&self.tafsirs[mb.tafsir as usize])
            })
            .then_with(|| a.row.cmp(&b.row))
    }

    fn tafsir_mask(&self, filter: Option<&[String]>) -> Result<Option<Vec<bool>>, IndexError> {
        let Some(ids) = filter.filter(|ids| !ids.is_empty()) else {
            return Ok(None);
        };
        let mut mask = vec![false; self.tafsirs.len()];
        for id in ids {
            let i = self
                .tafsirs
                .iter()
                .position(|t| t == id)
                .ok_or_else(|| IndexError::UnknownTafsir(id.clone()))?;
            mask[i] = true;
        }
        Ok(Some(mask))
    }

    /// Exact top-`k` scan for a query vector. `filter` restricts the scan to
    /// the listed tafsirs; `None` or an empty list searches everything.
    pub fn search_vector(
        &self,
        query: &[f32],
        k: usize,
        filter: Option<&[String]>,
    ) -> Result<Vec<Ranked>, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        if query.len() != self.dim {
            return Err(IndexError::Domain(format!(
                "query has {} components, index dimension is {}",
                query.len(),
                self.dim
            )));
        }
        let qn = norm(query);
        if qn == 0.0 || !qn.is_finite() {
            return Err(IndexError::Domain("query vector has zero or non-finite norm".into()));
        }
        let mask = self.tafsir_mask(filter)?;
        let candidates: Vec<usize> = match &mask {
            None => (0..self.len()).collect(),
            Some(m) => (0..self.len()).filter(|&i| m[self.rows[i].tafsir as usize]).collect(),
        };
        let mut ranked = crate::par::map_slice(&candidates, |&row| Ranked {
            row,
            score: cosine_from_parts(
                dot(query, &self.data[row * self.dim..(row + 1) * self.dim]),
                qn,
                self.norms[row],
            ),
        });
        let cmp = |a: &Ranked, b: &Ranked| self.compare_ranked(a, b);
        if k < ranked.len() {
            ranked.select_nth_unstable_by(k - 1, cmp);
            ranked.truncate(k);
        }
        ranked.sort_unstable_by(cmp);
        Ok(ranked)
    }
}

/// Embeds `prompt` with `provider` and returns the top-`k` entries.
pub fn search_top_k(
    index: &VectorIndex,
    provider: &dyn EmbeddingProvider,
    prompt: &str,
    k: usize,
    filter: Option<&[String]>,
) -> Result<Vec<Ranked>, IndexError> {
    if provider.name() != index.provider_name() {
        return Err(IndexError::ProviderMismatch {
            index: index.provider_name().to_string(),
            query: provider.name().to_string(),
        });
    }
    if k == 0 {
        return Err(IndexError::InvalidK);
    }
    index.tafsir_mask(filter)?;
    let query: DocVector = match provider.embed(prompt) {
        Ok(v) => v,
        Err(EmbedError::EmptyEmbedding) => return Err(IndexError::NoSearchableTerms),
        Err(e) => return Err(e.into()),
    };
    index.search_vector(query.values(), k, filter)
}
