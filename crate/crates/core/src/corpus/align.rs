use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{expand_verse_ref, CorpusError, Quran, TafsirCorpus, TafsirEntry, VerseKey};

/// Directory that alignment tables are written into.
pub const TABLE_DIR: &str = "tafsir_csv";

/// Commentary attached to a single verse. Ranged commentary yields one row
/// per covered verse, each carrying the full text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedRow {
    pub key: VerseKey,
    pub ayah_text: String,
    pub tafsir_text: String,
}

/// One record of an exported alignment table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    #[serde(rename = "Ayah")]
    pub ayah: String,
    #[serde(rename = "tafsir")]
    pub tafsir: String,
}

impl From<&AlignedRow> for TableRow {
    fn from(row: &AlignedRow) -> Self {
        TableRow {
            ayah: row.ayah_text.clone(),
            tafsir: row.tafsir_text.clone(),
        }
    }
}

/// Expands every entry to its covered verses and attaches verse text.
///
/// Rows are ordered by verse key; rows sharing a key keep entry order. This
/// order is the row numbering the vector index reuses.
pub fn align_tafsir_to_verses(
    entries: &[TafsirEntry],
    quran: &Quran,
) -> Result<Vec<AlignedRow>, CorpusError> {
    let mut rows = Vec::with_capacity(entries.iter().map(|e| e.vref.verse_count()).sum());
    let mut missing = Vec::new();
    for entry in entries {
        for key in expand_verse_ref(entry.surah, entry.vref)? {
            match quran.text(key) {
                Some(text) => rows.push(AlignedRow {
                    key,
                    ayah_text: text.to_string(),
                    tafsir_text: entry.commentary.clone(),
                }),
                None => missing.push(key),
            }
        }
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(CorpusError::Alignment(missing));
    }
    rows.sort_by_key(|r| r.key);
    Ok(rows)
}

/// Tafsir id to its aligned rows.
pub type AlignedCorpus = BTreeMap<String, Vec<AlignedRow>>;

/// Aligns every tafsir in `corpus`.
pub fn align_corpus(corpus: &TafsirCorpus, quran: &Quran) -> Result<AlignedCorpus, CorpusError> {
    corpus
        .iter()
        .map(|(id, entries)| Ok((id.clone(), align_tafsir_to_verses(entries, quran)?)))
        .collect()
}

/// Writes `<out_dir>/tafsir_csv/<tafsir_id>.csv` with header `Ayah,tafsir`.
pub fn export_alignment_table(
    rows: &[AlignedRow],
    out_dir: impl AsRef<Path>,
    tafsir_id: &str,
) -> Result<PathBuf, CorpusError> {
    if rows.is_empty() {
        return Err(CorpusError::Domain(format!(
            "no aligned rows to export for {tafsir_id}"
        )));
    }
    let dir = out_dir.as_ref().join(TABLE_DIR);
    std::fs::create_dir_all(&dir).map_err(|e| CorpusError::io(&dir, e))?;
    let path = dir.join(format!("{tafsir_id}.csv"));
    let file = std::fs::File::create(&path).map_err(|e| CorpusError::io(&path, e))?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(file);
    for row in rows {
        writer.serialize(TableRow::from(row))?;
    }
    writer.flush().map_err(|e| CorpusError::io(&path, e))?;
    Ok(path)
}

pub fn read_alignment_table(path: impl AsRef<Path>) -> Result<Vec<TableRow>, CorpusError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["Ayah", "tafsir"] {
        return Err(CorpusError::Domain(format!(
            "{}: expected header Ayah,tafsir",
            path.display()
        )));
    }
    reader
        .deserialize()
        .collect::<Result<Vec<TableRow>, _>>()
        .map_err(CorpusError::from)
}
