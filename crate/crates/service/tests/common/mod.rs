#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;

use serde_json::json;
use qsearch_core::corpus::{align_corpus, load_quran_text, load_tafsir_corpus, AlignedCorpus, Quran};
use qsearch_core::embedding::{
    train_cbow, DocVector, EmbedError, EmbeddingModel, EmbeddingProvider, LocalProvider,
};
use qsearch_core::index::{build_index, CommentaryStore, SearchEngine};
use qsearch_core::textnorm::{preprocess_document, TokenSequence};
use qsearch_service::api::AppState;
use qsearch_service::config::Settings;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn quran() -> Arc<Quran> {
    Arc::new(load_quran_text(fixtures().join("quran/quran-hafs.txt"), true).unwrap())
}

pub fn aligned(quran: &Quran) -> AlignedCorpus {
    align_corpus(&load_tafsir_corpus(fixtures().join("tafsir")).unwrap(), quran).unwrap()
}

/// CBOW model trained on the fixture corpus with the fixture config.
pub fn fixture_model() -> EmbeddingModel {
    let settings = Settings::load(fixtures().join("train.conf")).unwrap();
    let corpus = load_tafsir_corpus(fixtures().join("tafsir")).unwrap();
    let docs: Vec<TokenSequence> = corpus
        .values()
        .flatten()
        .map(|e| preprocess_document(&e.commentary, &settings.normalization))
        .collect();
    train_cbow(&docs, &settings.training, settings.normalization).unwrap()
}

pub fn engine_with(provider: Arc<dyn EmbeddingProvider>, quran: Arc<Quran>, aligned: &AlignedCorpus) -> SearchEngine {
    let (index, _) = build_index(aligned, provider.as_ref()).unwrap();
    let store = CommentaryStore::from_alignments(aligned, &Default::default());
    SearchEngine::new(index, provider, quran, store).unwrap()
}

pub fn fixture_engine(quran: Arc<Quran>) -> SearchEngine {
    let aligned = aligned(&quran);
    engine_with(Arc::new(LocalProvider::new(fixture_model())), quran, &aligned)
}

/// Hash-seeded token vectors under a caller-chosen provider name.
pub struct TagProvider {
    pub name: String,
    pub dim: usize,
}

impl EmbeddingProvider for TagProvider {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn embed(&self, text: &str) -> Result<DocVector, EmbedError> {
        let mut sum = vec![0.0f64; self.dim];
        let mut any = false;
        for tok in text.split_whitespace() {
            let mut h = tok
                .bytes()
                .fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3));
            for s in &mut sum {
                h ^= h << 13;
                h ^= h >> 7;
                h ^= h << 17;
                *s += (h % 2001) as f64 / 1000.0 - 1.0;
            }
            any = true;
        }
        if !any {
            return Err(EmbedError::EmptyEmbedding);
        }
        DocVector::normalized(&sum).ok_or(EmbedError::EmptyEmbedding)
    }
}

/// Serves the API on an ephemeral port for the rest of the test process.
pub fn spawn_server(state: Arc<AppState>) -> String {
    let std_listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    std_listener.set_nonblocking(true).unwrap();
    let base = format!("http://{}", std_listener.local_addr().unwrap());
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener).unwrap();
            qsearch_service::http::serve(listener, state, std::future::pending())
                .await
                .unwrap();
        });
    });
    base
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into()
}

/// Status and parsed JSON body (or the raw text as a JSON string).
pub fn post_json(agent: &ureq::Agent, url: &str, body: serde_json::Value) -> (u16, serde_json::Value) {
    let mut resp = agent.post(url).send_json(body).unwrap();
    let status = resp.status().as_u16();
    let text = resp.body_mut().read_to_string().unwrap();
    (status, serde_json::from_str(&text).unwrap_or(serde_json::Value::String(text)))
}

pub fn get(agent: &ureq::Agent, url: &str) -> (u16, serde_json::Value) {
    let mut resp = agent.get(url).call().unwrap();
    let status = resp.status().as_u16();
    let text = resp.body_mut().read_to_string().unwrap();
    (status, serde_json::from_str(&text).unwrap_or(serde_json::Value::String(text)))
}

fn renamed(base: &AlignedCorpus, prefix: &str, keep: usize) -> AlignedCorpus {
    base.iter()
        .take(keep)
        .map(|(id, rows)| (format!("{prefix}{id}"), rows.clone()))
        .collect()
}

pub fn generation(name: &str, prefix: &str, keep: usize) -> SearchEngine {
    let quran = quran();
    let corpus = renamed(&aligned(&quran), prefix, keep);
    engine_with(Arc::new(TagProvider { name: name.into(), dim: 16 }), quran, &corpus)
}

/// Every response must come wholly from one generation: provider name,
/// tafsir ids and counts agree.
pub fn check_info(body: &serde_json::Value) -> Result<(), String> {
    let (prefix, entries, tafsirs) = match body["provider_name"].as_str() {
        Some("gen-a") => ("a-", 25, 4),
        Some("gen-b") => ("b-", 9, 2),
        other => return Err(format!("unexpected provider {other:?}")),
    };
    let ids = body["tafsirs"].as_array().ok_or("no tafsirs")?;
    if body["entries"] != entries || ids.len() != tafsirs {
        return Err(format!("counts do not match provider: {body}"));
    }
    if !ids.iter().all(|t| t["id"].as_str().is_some_and(|s| s.starts_with(prefix))) {
        return Err(format!("mixed ids: {body}"));
    }
    Ok(())
}

pub fn check_search(body: &serde_json::Value) -> Result<(), String> {
    let prefix = match body["provider_name"].as_str() {
        Some("gen-a") => "a-",
        Some("gen-b") => "b-",
        other => return Err(format!("unexpected provider {other:?}")),
    };
    let hits = body["hits"].as_array().ok_or("no hits")?;
    if hits.is_empty() || !hits.iter().all(|h| h["tafsir_id"].as_str().is_some_and(|s| s.starts_with(prefix))) {
        return Err(format!("mixed hits: {body}"));
    }
    Ok(())
}

/// Runs `readers` HTTP clients against a server whose index a writer thread
/// keeps swapping between two generations. Returns the number of swaps and
/// the responses served from each generation, or the first mixed response.
pub fn swap_stress(readers: usize, requests: usize) -> Result<(usize, usize, usize), String> {
    let state = Arc::new(AppState::with_engine(quran(), generation("gen-a", "a-", 4)));
    let base = spawn_server(state.clone());
    let stop = Arc::new(AtomicBool::new(false));

    let writer = {
        let (state, stop) = (state.clone(), stop.clone());
        thread::spawn(move || {
            let mut swaps = 0usize;
            while !stop.load(Ordering::Relaxed) {
                let next = if swaps.is_multiple_of(2) {
                    generation("gen-b", "b-", 2)
                } else {
                    generation("gen-a", "a-", 4)
                };
                state.swap(next);
                swaps += 1;
            }
            swaps
        })
    };

    let handles: Vec<_> = (0..readers)
        .map(|r| {
            let base = base.clone();
            thread::spawn(move || -> Result<(usize, usize), String> {
                let agent = agent();
                let (mut seen_a, mut seen_b) = (0, 0);
                for i in 0..requests {
                    let body = if (r + i) % 2 == 0 {
                        let (status, body) = get(&agent, &format!("{base}/api/info"));
                        if status != 200 {
                            return Err(format!("info status {status}"));
                        }
                        check_info(&body)?;
                        body
                    } else {
                        let (status, body) = post_json(
                            &agent,
                            &format!("{base}/api/search"),
                            json!({"query": "الهاكم التكاثر", "k": 50}),
                        );
                        if status != 200 {
                            return Err(format!("search status {status}: {body}"));
                        }
                        check_search(&body)?;
                        body
                    };
                    if body["provider_name"] == "gen-a" {
                        seen_a += 1;
                    } else {
                        seen_b += 1;
                    }
                }
                Ok((seen_a, seen_b))
            })
        })
        .collect();

    let mut result = Ok((0, 0));
    for h in handles {
        let r = h.join().map_err(|_| "reader panicked".to_string()).and_then(|r| r);
        result = match (result, r) {
            (Ok((a, b)), Ok((x, y))) => Ok((a + x, b + y)),
            (Err(e), _) | (_, Err(e)) => Err(e),
        };
    }
    stop.store(true, Ordering::Relaxed);
    let swaps = writer.join().map_err(|_| "writer panicked".to_string())?;
    result.map(|(a, b)| (swaps, a, b))
}
