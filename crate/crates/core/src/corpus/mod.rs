//! Corpus ingestion: Qur'an text, per-surah tafsir files, verse references,
//! verse-aligned commentary tables and topic indexes.

mod align;
mod quran;
mod tafsir;
mod topics;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use align::{
    align_corpus, align_tafsir_to_verses, export_alignment_table, read_alignment_table,
    AlignedCorpus, AlignedRow, TableRow, TABLE_DIR,
};
pub use quran::{load_quran_text, Quran, Verse};
pub use tafsir::{load_tafsir_corpus, TafsirCorpus, TafsirEntry};
pub use topics::{load_topic_index, merge_topic_indexes, TopicIndex};

/// Number of surahs in the Qur'an.
pub const SURAH_COUNT: u16 = 114;

/// Number of ayahs in the Hafs reading.
pub const AYAH_TOTAL: usize = 6236;

/// Ayah count of every surah in the Hafs reading, indexed by `surah - 1`.
pub const AYAHS_PER_SURAH: [u16; 114] = [
    7, 286, 200, 176, 120, 165, 206, 75, 129, 109, 123, 111, 43, 52, 99, 128, 111, 110, 98, 135,
    112, 78, 118, 64, 77, 227, 93, 88, 69, 60, 34, 30, 73, 54, 45, 83, 182, 88, 75, 85, 54, 53,
    89, 59, 37, 35, 38, 29, 18, 45, 60, 49, 62, 55, 78, 96, 29, 22, 24, 13, 14, 11, 11, 18, 12,
    12, 30, 52, 52, 44, 28, 28, 20, 56, 40, 31, 50, 40, 46, 42, 29, 19, 36, 25, 22, 17, 19, 26,
    30, 20, 15, 21, 11, 8, 8, 19, 5, 8, 8, 11, 11, 8, 3, 9, 5, 4, 7, 3, 6, 3, 5, 4, 5, 6,
];

const KEY_BASE: u32 = 1000;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot parse {token:?}: {reason}")]
    Parse { token: String, reason: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Domain(String),
    #[error("duplicate verse {0}")]
    Duplicate(VerseKey),
    #[error("expected {expected_verses} verses in {expected_surahs} surahs, found {verses} verses in {surahs} surahs")]
    Validation {
        expected_verses: usize,
        expected_surahs: usize,
        verses: usize,
        surahs: usize,
    },
    #[error("tafsir {tafsir}, surah {surah}: {message}")]
    Ingest {
        tafsir: String,
        surah: u16,
        message: String,
    },
    #[error("verses not present in the Qur'an text: {}", format_keys(.0))]
    Alignment(Vec<VerseKey>),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn format_keys(keys: &[VerseKey]) -> String {
    keys.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.into(),
            source,
        }
    }

    fn parse(token: &str, reason: impl Into<String>) -> Self {
        CorpusError::Parse {
            token: token.to_string(),
            reason: reason.into(),
        }
    }
}

/// A verse address. Ordering is (surah, ayah), which matches the ordering
/// of the encoded integer form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VerseKey {
    surah: u16,
    ayah: u16,
}

impl VerseKey {
    /// Builds a key; the surah must lie in 1..=114 and the ayah in 1..=999.
    pub fn new(surah: u16, ayah: u16) -> Result<Self, CorpusError> {
        if !(1..=SURAH_COUNT).contains(&surah) {
            return Err(CorpusError::Domain(format!(
                "surah {surah} outside 1..={SURAH_COUNT}"
            )));
        }
        if ayah == 0 || u32::from(ayah) >= KEY_BASE {
            return Err(CorpusError::Domain(format!(
                "ayah {ayah} outside 1..={}",
                KEY_BASE - 1
            )));
        }
        Ok(VerseKey { surah, ayah })
    }

    pub fn surah(self) -> u16 {
        self.surah
    }

    pub fn ayah(self) -> u16 {
        self.ayah
    }

    /// `surah * 1000 + ayah`.
    pub fn encode(self) -> u32 {
        u32::from(self.surah) * KEY_BASE + u32::from(self.ayah)
    }

    pub fn decode(encoded: u32) -> Result<Self, CorpusError> {
        let surah = encoded / KEY_BASE;
        let ayah = encoded % KEY_BASE;
        if ayah == 0 || surah == 0 || surah > u32::from(SURAH_COUNT) {
            return Err(CorpusError::Domain(format!(
                "{encoded} is not an encoded verse key"
            )));
        }
        VerseKey::new(surah as u16, ayah as u16)
    }

    /// True when the ayah exists in its surah under the Hafs numbering.
    pub fn is_canonical(self) -> bool {
        self.ayah <= AYAHS_PER_SURAH[usize::from(self.surah) - 1]
    }
}

impl fmt::Display for VerseKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.surah, self.ayah)
    }
}

/// Parses the `surah:ayah` notation.
impl FromStr for VerseKey {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (surah, ayah) = t
            .split_once(':')
            .ok_or_else(|| CorpusError::parse(t, "expected surah:ayah"))?;
        let surah = parse_positive(surah)?;
        let ayah = parse_positive(ayah)?;
        VerseKey::new(surah, ayah)
    }
}

pub fn encode_verse_key(surah: u16, ayah: u16) -> Result<u32, CorpusError> {
    VerseKey::new(surah, ayah).map(VerseKey::encode)
}

pub fn decode_verse_key(encoded: u32) -> Result<(u16, u16), CorpusError> {
    VerseKey::decode(encoded).map(|k| (k.surah, k.ayah))
}

/// The verse span a tafsir entry comments on, relative to its surah.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerseRef {
    Single(u16),
    /// Inclusive, `start <= end`.
    Range(u16, u16),
}

impl VerseRef {
    /// Number of verses covered.
    pub fn verse_count(self) -> usize {
        match self {
            VerseRef::Single(_) => 1,
            VerseRef::Range(a, b) => usize::from(b.saturating_sub(a)) + 1,
        }
    }
}

fn parse_positive(token: &str) -> Result<u16, CorpusError> {
    let t = token.trim();
    if t.is_empty() {
        return Err(CorpusError::parse(token, "empty number"));
    }
    if !t.bytes().all(|b| b.is_ascii_digit()) {
        return Err(CorpusError::parse(t, "not a positive integer"));
    }
    match t.parse::<u16>() {
        Ok(0) => Err(CorpusError::parse(t, "verse numbers start at 1")),
        Ok(n) => Ok(n),
        Err(_) => Err(CorpusError::parse(t, "number too large")),
    }
}

/// Parses `"N"` or `"A-B"`. Reversed ranges are normalized so the smaller
/// number comes first.
pub fn parse_verse_ref(raw: &str) -> Result<VerseRef, CorpusError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(CorpusError::parse(raw, "empty verse reference"));
    }
    match raw.split_once('-') {
        None => parse_positive(raw).map(VerseRef::Single),
        Some((a, b)) => {
            let a = parse_positive(a)?;
            let b = parse_positive(b)?;
            Ok(VerseRef::Range(a.min(b), a.max(b)))
        }
    }
}

/// Lists the keys covered by `vref` in ascending order.
pub fn expand_verse_ref(surah: u16, vref: VerseRef) -> Result<Vec<VerseKey>, CorpusError> {
    let (start, end) = match vref {
        VerseRef::Single(n) => (n, n),
        VerseRef::Range(a, b) if a <= b => (a, b),
        VerseRef::Range(a, b) => {
            return Err(CorpusError::Domain(format!("range {a}-{b} is reversed")))
        }
    };
    (start..=end).map(|ayah| VerseKey::new(surah, ayah)).collect()
}
