use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, VerseKey, AYAH_TOTAL, SURAH_COUNT};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verse {
    pub key: VerseKey,
    pub text: String,
}

/// Verses in ascending key order with O(1) lookup by key.
#[derive(Debug, Clone, Default)]
pub struct Quran {
    verses: Vec<Verse>,
    positions: HashMap<VerseKey, usize>,
}

impl Quran {
    /// Parses `surah|ayah|text` lines. Blank lines and lines starting with
    /// `#` are ignored.
    pub fn parse(source: &str) -> Result<Self, CorpusError> {
        let mut verses = Vec::new();
        for (idx, line) in source.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut parts = trimmed.splitn(3, '|');
            let (Some(surah), Some(ayah), Some(text)) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(CorpusError::Line {
                    line: line_no,
                    message: "expected surah|ayah|text".into(),
                });
            };
            let bad = |what: &str| CorpusError::Line {
                line: line_no,
                message: format!("invalid {what}"),
            };
            let surah: u16 = surah.trim().parse().map_err(|_| bad("surah number"))?;
            let ayah: u16 = ayah.trim().parse().map_err(|_| bad("ayah number"))?;
            let key = VerseKey::new(surah, ayah).map_err(|e| CorpusError::Line {
                line: line_no,
                message: e.to_string(),
            })?;
            let text = text.trim();
            if text.is_empty() {
                return Err(CorpusError::Line {
                    line: line_no,
                    message: format!("verse {key} has no text"),
                });
            }
            verses.push(Verse {
                key,
                text: text.to_string(),
            });
        }
        Self::from_verses(verses)
    }

    pub fn from_verses(mut verses: Vec<Verse>) -> Result<Self, CorpusError> {
        verses.sort_by_key(|v| v.key);
        if let Some(w) = verses.windows(2).find(|w| w[0].key == w[1].key) {
            return Err(CorpusError::Duplicate(w[0].key));
        }
        let positions = verses.iter().enumerate().map(|(i, v)| (v.key, i)).collect();
        Ok(Quran { verses, positions })
    }

    pub fn get(&self, key: VerseKey) -> Option<&Verse> {
        self.positions.get(&key).map(|&i| &self.verses[i])
    }

    pub fn text(&self, key: VerseKey) -> Option<&str> {
        self.get(key).map(|v| v.text.as_str())
    }

    pub fn contains(&self, key: VerseKey) -> bool {
        self.positions.contains_key(&key)
    }

    pub fn verses(&self) -> &[Verse] {
        &self.verses
    }

    pub fn len(&self) -> usize {
        self.verses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verses.is_empty()
    }

    pub fn surah_count(&self) -> usize {
        let mut n = 0;
        let mut last = 0;
        for v in &self.verses {
            if v.key.surah() != last {
                last = v.key.surah();
                n += 1;
            }
        }
        n
    }

    /// Checks for the full Hafs layout: 114 surahs, 6,236 verses, and every
    /// ayah number within its surah's count.
    pub fn validate_canonical(&self) -> Result<(), CorpusError> {
        let surahs = self.surah_count();
        let in_bounds = self.verses.iter().all(|v| v.key.is_canonical());
        if self.len() != AYAH_TOTAL || surahs != usize::from(SURAH_COUNT) || !in_bounds {
            return Err(CorpusError::Validation {
                expected_verses: AYAH_TOTAL,
                expected_surahs: usize::from(SURAH_COUNT),
                verses: self.len(),
                surahs,
            });
        }
        Ok(())
    }
}

/// Reads a Qur'an text file; with `validate` set the result must be the
/// complete canonical layout.
pub fn load_quran_text(path: impl AsRef<Path>, validate: bool) -> Result<Quran, CorpusError> {
    let path = path.as_ref();
    let source = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let quran = Quran::parse(&source)?;
    if validate {
        quran.validate_canonical()?;
    }
    Ok(quran)
}
