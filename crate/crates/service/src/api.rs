//! Request handling independent of the HTTP transport.

use std::sync::{Arc, RwLock};
use std::time::Instant;

use qsearch_core::corpus::{Quran, VerseKey};
use qsearch_core::index::{IndexError, SearchEngine, DEFAULT_K};
use serde::{Deserialize, Serialize};

pub const MAX_K: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRequest {
    pub query: String,
    #[serde(default = "default_k")]
    pub k: i64,
    #[serde(default)]
    pub tafsirs: Option<Vec<String>>,
}

fn default_k() -> i64 {
    DEFAULT_K as i64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitBody {
    pub tafsir_id: String,
    pub surah: u16,
    pub ayah: u16,
    pub score: f64,
    pub ayah_text: String,
    pub tafsir_excerpt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub hits: Vec<HitBody>,
    pub elapsed_ms: f64,
    pub provider_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerseBody {
    pub surah: u16,
    pub ayah: u16,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TafsirCount {
    pub id: String,
    pub entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub tafsirs: Vec<TafsirCount>,
    pub entries: usize,
    pub provider_name: String,
    pub dim: usize,
}

/// A protocol error: HTTP status, machine-readable code, human message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: u16,
    pub code: &'static str,
    pub message: String,
}

#[derive(Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn new(status: u16, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            code: self.code.to_string(),
            message: self.message.clone(),
        }
    }

    fn not_loaded() -> Self {
        ApiError::new(503, "index_not_loaded", "index not loaded")
    }
}

impl From<IndexError> for ApiError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::NoSearchableTerms => {
                ApiError::new(422, "no_searchable_terms", "no searchable terms in the query")
            }
            IndexError::UnknownTafsir(_) => ApiError::new(404, "unknown_tafsir", e.to_string()),
            IndexError::InvalidK => ApiError::new(400, "invalid_k", e.to_string()),
            IndexError::Embed(_) => ApiError::new(502, "provider_error", e.to_string()),
            _ => ApiError::new(500, "internal", e.to_string()),
        }
    }
}

/// Shared service state. The engine is replaced as a whole, so a request
/// sees either the old or the new index, never a mix.
pub struct AppState {
    quran: Arc<Quran>,
    engine: RwLock<Option<Arc<SearchEngine>>>,
}

impl AppState {
    pub fn new(quran: Arc<Quran>) -> Self {
        AppState {
            quran,
            engine: RwLock::new(None),
        }
    }

    pub fn with_engine(quran: Arc<Quran>, engine: SearchEngine) -> Self {
        let state = AppState::new(quran);
        state.swap(engine);
        state
    }

    /// Installs `engine`, returning the one it replaced.
    pub fn swap(&self, engine: SearchEngine) -> Option<Arc<SearchEngine>> {
        let mut slot = self.engine.write().unwrap_or_else(|p| p.into_inner());
        slot.replace(Arc::new(engine))
    }

    pub fn engine(&self) -> Option<Arc<SearchEngine>> {
        self.engine.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn quran(&self) -> &Quran {
        &self.quran
    }
}

pub fn handle_search(state: &AppState, req: &SearchRequest) -> Result<SearchResponse, ApiError> {
    let start = Instant::now();
    if !(1..=MAX_K as i64).contains(&req.k) {
        return Err(ApiError::new(
            400,
            "invalid_k",
            format!("k must be between 1 and {MAX_K}, got {}", req.k),
        ));
    }
    if req.query.trim().is_empty() {
        return Err(ApiError::new(422, "no_searchable_terms", "query is empty"));
    }
    let engine = state.engine().ok_or_else(ApiError::not_loaded)?;
    let hits = engine.search(&req.query, req.k as usize, req.tafsirs.as_deref())?;
    Ok(SearchResponse {
        hits: hits
            .into_iter()
            .map(|h| HitBody {
                tafsir_id: h.tafsir_id,
                surah: h.key.surah(),
                ayah: h.key.ayah(),
                score: h.score,
                ayah_text: h.ayah_text,
                tafsir_excerpt: h.tafsir_excerpt,
            })
            .collect(),
        elapsed_ms: start.elapsed().as_secs_f64() * 1000.0,
        provider_name: engine.provider().name().to_string(),
    })
}

pub fn handle_verse_lookup(state: &AppState, surah: i64, ayah: i64) -> Result<VerseBody, ApiError> {
    let not_found = || ApiError::new(404, "unknown_verse", format!("no verse {surah}:{ayah}"));
    let (s, a) = (u16::try_from(surah).map_err(|_| not_found())?, u16::try_from(ayah).map_err(|_| not_found())?);
    let key = VerseKey::new(s, a).map_err(|_| not_found())?;
    let text = state.quran.text(key).ok_or_else(not_found)?;
    Ok(VerseBody {
        surah: s,
        ayah: a,
        text: text.to_string(),
    })
}

pub fn handle_corpus_info(state: &AppState) -> Result<CorpusInfo, ApiError> {
    let engine = state.engine().ok_or_else(ApiError::not_loaded)?;
    let index = engine.index();
    Ok(CorpusInfo {
        tafsirs: index
            .counts_by_tafsir()
            .into_iter()
            .map(|(id, entries)| TafsirCount {
                id: id.to_string(),
                entries,
            })
            .collect(),
        entries: index.len(),
        provider_name: index.provider_name().to_string(),
        dim: index.dim(),
    })
}
