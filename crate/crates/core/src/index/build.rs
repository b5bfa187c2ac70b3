use std::collections::HashMap;

use super::{IndexError, VectorIndex};
use crate::corpus::{AlignedCorpus, VerseKey};
use crate::embedding::{DocVector, EmbedError, EmbeddingProvider};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub entries: usize,
    /// Rows dropped because their commentary had no embeddable tokens.
    pub skipped: Vec<(String, VerseKey)>,
}

/// Embeds every aligned row and collects the vectors in alignment order,
/// tafsir by tafsir. Identical commentary texts are embedded once.
pub fn build_index(
    alignments: &AlignedCorpus,
    provider: &dyn EmbeddingProvider,
) -> Result<(VectorIndex, BuildReport), IndexError> {
    if alignments.values().all(Vec::is_empty) {
        return Err(IndexError::Build("no aligned rows to index".into()));
    }

    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut unique: Vec<&str> = Vec::new();
    for row in alignments.values().flatten() {
        slot.entry(row.tafsir_text.as_str()).or_insert_with(|| {
            unique.push(row.tafsir_text.as_str());
            unique.len() - 1
        });
    }

    let embedded: Vec<Result<Option<DocVector>, EmbedError>> =
        crate::par::map_slice(&unique, |text| match provider.embed(text) {
            Ok(v) => Ok(Some(v)),
            Err(EmbedError::EmptyEmbedding) => Ok(None),
            Err(e) => Err(e),
        });
    let vectors = embedded.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut index = VectorIndex::new(provider.name(), provider.dim())?;
    let mut report = BuildReport::default();
    for (tafsir_id, rows) in alignments {
        for row in rows {
            match &vectors[slot[row.tafsir_text.as_str()]] {
                Some(v) => index.push(tafsir_id, row.key, v.values())?,
                None => report.skipped.push((tafsir_id.clone(), row.key)),
            }
        }
    }
    if index.is_empty() {
        return Err(IndexError::Build(format!(
            "none of the {} rows produced an embedding",
            report.skipped.len()
        )));
    }
    report.entries = index.len();
    Ok((index, report))
}
