use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{search_top_k, IndexError, VectorIndex};
use crate::corpus::{AlignedCorpus, Quran, VerseKey};
use crate::embedding::EmbeddingProvider;
use crate::textnorm::{normalize_arabic, NormalizationConfig};

/// Length of the commentary excerpt attached to hits, in characters.
pub const EXCERPT_CHARS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub tafsir_id: String,
    pub key: VerseKey,
    pub score: f64,
    pub ayah_text: String,
    pub tafsir_excerpt: String,
}

/// Normalized commentary excerpts by (tafsir id, verse key). A verse covered
/// by several entries of one tafsir keeps one excerpt per entry, in
/// alignment order.
#[derive(Debug, Clone, Default)]
pub struct CommentaryStore {
    excerpts: HashMap<(String, VerseKey), Vec<String>>,
}

impl CommentaryStore {
    pub fn from_alignments(alignments: &AlignedCorpus, cfg: &NormalizationConfig) -> Self {
        let mut excerpts: HashMap<(String, VerseKey), Vec<String>> = HashMap::new();
        for (id, rows) in alignments {
            for row in rows {
                let excerpt: String =
                    normalize_arabic(&row.tafsir_text, cfg).chars().take(EXCERPT_CHARS).collect();
                excerpts.entry((id.clone(), row.key)).or_default().push(excerpt);
            }
        }
        CommentaryStore { excerpts }
    }

    pub fn excerpt(&self, tafsir_id: &str, key: VerseKey, nth: usize) -> Option<&str> {
        self.excerpts
            .get(&(tafsir_id.to_string(), key))
            .and_then(|v| v.get(nth).or_else(|| v.first()))
            .map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.excerpts.is_empty()
    }
}

/// An index with everything needed to answer prompts: the provider that
/// built it, the Qur'an text for verse lookup, and optional excerpts.
pub struct SearchEngine {
    index: VectorIndex,
    provider: Arc<dyn EmbeddingProvider>,
    quran: Arc<Quran>,
    store: CommentaryStore,
    /// For each row, how many earlier rows share its (tafsir, key).
    nth: Vec<usize>,
}

impl SearchEngine {
    pub fn new(
        index: VectorIndex,
        provider: Arc<dyn EmbeddingProvider>,
        quran: Arc<Quran>,
        store: CommentaryStore,
    ) -> Result<Self, IndexError> {
        if provider.name() != index.provider_name() {
            return Err(IndexError::ProviderMismatch {
                index: index.provider_name().to_string(),
                query: provider.name().to_string(),
            });
        }
        if let Some(e) = index.entries().find(|e| !quran.contains(e.key)) {
            return Err(IndexError::Domain(format!(
                "index entry {} {} has no verse in the loaded Qur'an text",
                e.tafsir_id, e.key
            )));
        }
        let mut seen: HashMap<(&str, VerseKey), usize> = HashMap::new();
        let nth = index
            .entries()
            .map(|e| {
                let c = seen.entry((e.tafsir_id, e.key)).or_default();
                *c += 1;
                *c - 1
            })
            .collect();
        Ok(SearchEngine {
            index,
            provider,
            quran,
            store,
            nth,
        })
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }

    pub fn provider(&self) -> &dyn EmbeddingProvider {
        self.provider.as_ref()
    }

    pub fn quran(&self) -> &Quran {
        &self.quran
    }

    pub fn search(
        &self,
        prompt: &str,
        k: usize,
        filter: Option<&[String]>,
    ) -> Result<Vec<Hit>, IndexError> {
        let ranked = search_top_k(&self.index, self.provider.as_ref(), prompt, k, filter)?;
        Ok(ranked
            .into_iter()
            .map(|r| {
                let e = self.index.entry(r.row);
                Hit {
                    tafsir_id: e.tafsir_id.to_string(),
                    key: e.key,
                    score: r.score,
                    ayah_text: self.quran.text(e.key).unwrap_or_default().to_string(),
                    tafsir_excerpt: self
                        .store
                        .excerpt(e.tafsir_id, e.key, self.nth[r.row])
                        .unwrap_or_default()
                        .to_string(),
                }
            })
            .collect())
    }
}
