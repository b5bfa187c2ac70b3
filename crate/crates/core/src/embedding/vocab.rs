use std::collections::HashMap;

use super::EmbedError;
use crate::textnorm::TokenSequence;

/// Token/id mapping. Ids are dense, assigned by descending corpus frequency
/// with ties broken by token order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    ids: HashMap<String, u32>,
    tokens: Vec<String>,
    counts: Vec<u64>,
    min_count: u64,
}

impl Vocabulary {
    /// Builds a vocabulary from `(token, count)` pairs already in id order.
    pub fn from_counts(entries: Vec<(String, u64)>, min_count: u64) -> Result<Self, EmbedError> {
        let mut ids = HashMap::with_capacity(entries.len());
        let mut tokens = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        for (i, (token, count)) in entries.into_iter().enumerate() {
            let id = u32::try_from(i).map_err(|_| EmbedError::Train("vocabulary too large".into()))?;
            if ids.insert(token.clone(), id).is_some() {
                return Err(EmbedError::Domain(format!("duplicate token {token:?}")));
            }
            tokens.push(token);
            counts.push(count);
        }
        Ok(Vocabulary {
            ids,
            tokens,
            counts,
            min_count,
        })
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Sum of all kept token counts.
    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn build_vocabulary(corpus: &[TokenSequence], min_count: u64) -> Result<Vocabulary, EmbedError> {
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for doc in corpus {
        for tok in doc.iter() {
            *freq.entry(tok).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = freq.into_iter().filter(|&(_, c)| c >= min_count).collect();
    if kept.is_empty() {
        return Err(EmbedError::Train(format!(
            "no token occurs at least {min_count} times"
        )));
    }
    kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocabulary::from_counts(
        kept.into_iter().map(|(t, c)| (t.to_string(), c)).collect(),
        min_count,
    )
}
