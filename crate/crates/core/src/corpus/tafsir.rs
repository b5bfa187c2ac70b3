use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{parse_verse_ref, CorpusError, VerseRef, SURAH_COUNT};

/// One commentary block as it appears in a tafsir file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TafsirEntry {
    pub surah: u16,
    pub vref: VerseRef,
    pub commentary: String,
}

/// Tafsir id (folder name) to entries in file order, surahs ascending.
pub type TafsirCorpus = BTreeMap<String, Vec<TafsirEntry>>;

#[derive(Deserialize)]
struct RawEntry {
    vref: String,
    text: String,
}

/// File name of a surah's commentary inside a tafsir folder.
pub fn surah_file_name(surah: u16) -> String {
    format!("{surah:03}.json")
}

/// Loads every `<root>/<tafsir_id>/NNN.json` file. Surah files that do not
/// exist are skipped; hidden folders and plain files under `root` are
/// ignored.
pub fn load_tafsir_corpus(root: impl AsRef<Path>) -> Result<TafsirCorpus, CorpusError> {
    let root = root.as_ref();
    let listing = std::fs::read_dir(root).map_err(|e| CorpusError::io(root, e))?;
    let mut corpus = TafsirCorpus::new();
    for dirent in listing {
        let dirent = dirent.map_err(|e| CorpusError::io(root, e))?;
        let path = dirent.path();
        if !path.is_dir() {
            continue;
        }
        let Some(id) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if id.starts_with('.') {
            continue;
        }
        corpus.insert(id.to_string(), load_tafsir_folder(id, &path)?);
    }
    Ok(corpus)
}

fn load_tafsir_folder(id: &str, dir: &Path) -> Result<Vec<TafsirEntry>, CorpusError> {
    let mut entries = Vec::new();
    for surah in 1..=SURAH_COUNT {
        let file = dir.join(surah_file_name(surah));
        if !file.is_file() {
            continue;
        }
        let ingest = |message: String| CorpusError::Ingest {
            tafsir: id.to_string(),
            surah,
            message,
        };
        let bytes = std::fs::read(&file).map_err(|e| ingest(e.to_string()))?;
        let raw: Vec<RawEntry> =
            serde_json::from_slice(&bytes).map_err(|e| ingest(e.to_string()))?;
        for (i, item) in raw.into_iter().enumerate() {
            let vref = parse_verse_ref(&item.vref)
                .map_err(|e| ingest(format!("entry {i}: {e}")))?;
            if item.text.trim().is_empty() {
                return Err(ingest(format!("entry {i} ({}) has empty commentary", item.vref)));
            }
            entries.push(TafsirEntry {
                surah,
                vref,
                commentary: item.text,
            });
        }
    }
    Ok(entries)
}
