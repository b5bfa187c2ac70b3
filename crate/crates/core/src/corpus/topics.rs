use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, VerseKey};

/// Topic name to the verses addressing it. Names are stored trimmed and
/// lower-cased; verse lists are sorted and free of duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicIndex {
    topics: BTreeMap<String, Vec<VerseKey>>,
}

fn fold_topic(name: &str) -> String {
    name.trim().to_lowercase()
}

impl TopicIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds verses under `topic`, merging with whatever is already there.
    pub fn insert(
        &mut self,
        topic: &str,
        keys: impl IntoIterator<Item = VerseKey>,
    ) -> Result<(), CorpusError> {
        let name = fold_topic(topic);
        if name.is_empty() {
            return Err(CorpusError::Domain("topic names must be non-empty".into()));
        }
        let list = self.topics.entry(name).or_default();
        list.extend(keys);
        list.sort();
        list.dedup();
        Ok(())
    }

    pub fn get(&self, topic: &str) -> Option<&[VerseKey]> {
        self.topics.get(&fold_topic(topic)).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[VerseKey])> {
        self.topics.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    /// Parses lines of the form `topic<TAB>s:a[,s:a...]`.
    pub fn parse(source: &str) -> Result<Self, CorpusError> {
        let mut index = TopicIndex::new();
        for (idx, line) in source.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let line_err = |message: String| CorpusError::Line {
                line: idx + 1,
                message,
            };
            let (topic, refs) = line
                .split_once('\t')
                .ok_or_else(|| line_err("expected topic<TAB>verses".into()))?;
            let keys = refs
                .split(',')
                .filter(|r| !r.trim().is_empty())
                .map(str::parse::<VerseKey>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| line_err(e.to_string()))?;
            index.insert(topic, keys).map_err(|e| line_err(e.to_string()))?;
        }
        Ok(index)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (topic, keys) in &self.topics {
            let refs: Vec<String> = keys.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "{topic}\t{}", refs.join(","));
        }
        out
    }
}

pub fn load_topic_index(path: impl AsRef<Path>) -> Result<TopicIndex, CorpusError> {
    let path = path.as_ref();
    let source = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    TopicIndex::parse(&source)
}

/// Union of two indexes: topic names compared case-insensitively after
/// trimming, verse lists unioned.
pub fn merge_topic_indexes(a: &TopicIndex, b: &TopicIndex) -> TopicIndex {
    let mut merged = a.clone();
    for (topic, keys) in &b.topics {
        merged
            .topics
            .entry(topic.clone())
            .and_modify(|list| {
                list.extend_from_slice(keys);
                list.sort();
                list.dedup();
            })
            .or_insert_with(|| keys.clone());
    }
    merged
}
