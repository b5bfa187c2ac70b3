//! The `qsearch` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use qsearch_core::corpus::{
    align_corpus, export_alignment_table, load_quran_text, load_tafsir_corpus, load_topic_index,
    merge_topic_indexes, AlignedCorpus, CorpusError, Quran, TopicIndex,
};
use qsearch_core::embedding::{
    persist_model, restore_model, train_cbow_with_report, EmbedError, EmbeddingProvider,
    LocalProvider, RemoteProvider,
};
use qsearch_core::eval::{load_topic_prompts, render_report, run_eval, EvalError, ReportFormat};
use qsearch_core::index::{
    build_index, persist_index, restore_index, CommentaryStore, IndexError, SearchEngine,
};
use qsearch_core::textnorm::{preprocess_document, NormalizationConfig, TokenSequence};
use thiserror::Error;

use crate::api::{self, AppState, SearchRequest};
use crate::config::{ConfigError, Settings};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::Io { .. } | EmbedError::Provider(_) => CliError::Io(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Io { .. } => CliError::Io(e.to_string()),
            IndexError::Embed(inner) => inner.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io { .. } => CliError::Io(e.to_string()),
            EvalError::Index(inner) => inner.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::Io(e.to_string()),
            ConfigError::Parse { .. } => CliError::Data(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "qsearch", version, about = "Verse-level semantic search over tafsir commentary")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align tafsir entries to verses and export one CSV table per tafsir.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        quran: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Topic index files to merge into <out>/topics.tsv.
        #[arg(long = "topics")]
        topics: Vec<PathBuf>,
        /// Accept a Qur'an file that is not the complete 6,236-verse text.
        #[arg(long)]
        partial_quran: bool,
    },
    /// Train a CBOW model on the tafsir corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
    /// Embed every aligned row and write an index file.
    Index {
        #[command(flatten)]
        provider: ProviderArgs,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        quran: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one query against an index.
    Search {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        quran: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(short = 'k', long = "k", default_value_t = 10)]
        k: i64,
        #[arg(long = "tafsir")]
        tafsirs: Vec<String>,
        #[command(flatten)]
        provider: ProviderArgs,
        /// Tafsir corpus to take excerpts from.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Print the response as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Evaluate labeled topic prompts and write a report.
    Eval {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        quran: PathBuf,
        #[command(flatten)]
        provider: ProviderArgs,
        /// text or tsv
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Serve the HTTP API. SIGHUP reloads the index file.
    Serve {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        quran: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[command(flatten)]
        provider: ProviderArgs,
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ProviderArgs {
    /// Local CBOW model file.
    #[arg(long, required_unless_present = "endpoint", conflicts_with = "endpoint")]
    pub model: Option<PathBuf>,
    /// Base URL of an embedding server.
    #[arg(long, requires = "dim")]
    pub endpoint: Option<String>,
    /// Vector size the embedding server produces.
    #[arg(long, requires = "endpoint")]
    pub dim: Option<usize>,
    /// Name recorded in the index for a remote provider.
    #[arg(long, requires = "endpoint")]
    pub provider_name: Option<String>,
}

impl ProviderArgs {
    pub fn open(&self) -> Result<Arc<dyn EmbeddingProvider>, CliError> {
        match (&self.model, &self.endpoint, self.dim) {
            (Some(path), _, _) => Ok(Arc::new(LocalProvider::new(restore_model(path)?))),
            (None, Some(endpoint), Some(dim)) => {
                let name = self
                    .provider_name
                    .clone()
                    .unwrap_or_else(|| format!("remote-{dim}d"));
                Ok(Arc::new(RemoteProvider::new(name, endpoint, dim)))
            }
            _ => Err(CliError::Usage("either --model or --endpoint with --dim is required".into())),
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct TrainOverrides {
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub initial_lr: Option<f64>,
    #[arg(long)]
    pub min_lr: Option<f64>,
    #[arg(long)]
    pub subsample_t: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub no_strip_diacritics: bool,
    #[arg(long)]
    pub no_normalize_alef: bool,
    #[arg(long)]
    pub no_normalize_yaa: bool,
    #[arg(long)]
    pub no_normalize_taa_marbuta: bool,
    #[arg(long)]
    pub no_remove_tatweel: bool,
    #[arg(long)]
    pub no_strip_punct: bool,
}

impl TrainOverrides {
    pub fn apply(&self, s: &mut Settings) {
        let t = &mut s.training;
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { t.$f = v; } )* };
        }
        take!(dim, window, negatives, epochs, initial_lr, min_lr, subsample_t, seed, min_count);
        let n = &mut s.normalization;
        n.strip_diacritics &= !self.no_strip_diacritics;
        n.normalize_alef &= !self.no_normalize_alef;
        n.normalize_yaa &= !self.no_normalize_yaa;
        n.normalize_taa_marbuta &= !self.no_normalize_taa_marbuta;
        n.remove_tatweel &= !self.no_remove_tatweel;
        n.strip_punct &= !self.no_strip_punct;
    }
}

/// Loads the Qur'an text and aligns every tafsir in `corpus` to it.
pub fn load_aligned(corpus: &Path, quran: &Path, validate: bool) -> Result<(Quran, AlignedCorpus), CliError> {
    let quran = load_quran_text(quran, validate)?;
    let tafsirs = load_tafsir_corpus(corpus)?;
    if tafsirs.is_empty() {
        return Err(CliError::Data(format!("no tafsir folders under {}", corpus.display())));
    }
    let aligned = align_corpus(&tafsirs, &quran)?;
    Ok((quran, aligned))
}

/// Restores an index and pairs it with its provider, the Qur'an text and,
/// when a corpus is given, commentary excerpts.
pub fn open_engine(
    index: &Path,
    provider: Arc<dyn EmbeddingProvider>,
    quran: Arc<Quran>,
    corpus: Option<&Path>,
) -> Result<SearchEngine, CliError> {
    let index = restore_index(index)?;
    let store = match corpus {
        Some(dir) => {
            let aligned = align_corpus(&load_tafsir_corpus(dir)?, &quran)?;
            CommentaryStore::from_alignments(&aligned, &NormalizationConfig::default())
        }
        None => CommentaryStore::default(),
    };
    Ok(SearchEngine::new(index, provider, quran, store)?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn ingest(
    corpus: &Path,
    quran: &Path,
    out: &Path,
    topics: &[PathBuf],
    partial: bool,
) -> Result<(), CliError> {
    let (_, aligned) = load_aligned(corpus, quran, !partial)?;
    for (id, rows) in &aligned {
        let path = export_alignment_table(rows, out, id)?;
        println!("{id}: {} rows -> {}", rows.len(), path.display());
    }
    if !topics.is_empty() {
        let mut merged = TopicIndex::new();
        for path in topics {
            merged = merge_topic_indexes(&merged, &load_topic_index(path)?);
        }
        let path = out.join("topics.tsv");
        write_file(&path, &merged.to_tsv())?;
        println!("{} topics -> {}", merged.len(), path.display());
    }
    Ok(())
}

fn train(corpus: &Path, config: Option<&Path>, out: &Path, overrides: &TrainOverrides) -> Result<(), CliError> {
    let mut settings = match config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    overrides.apply(&mut settings);
    let tafsirs = load_tafsir_corpus(corpus)?;
    let docs: Vec<TokenSequence> = tafsirs
        .values()
        .flatten()
        .map(|e| preprocess_document(&e.commentary, &settings.normalization))
        .collect();
    if docs.is_empty() {
        return Err(CliError::Data(format!("no commentary found under {}", corpus.display())));
    }
    let (model, report) = train_cbow_with_report(&docs, &settings.training, settings.normalization)?;
    persist_model(&model, out)?;
    println!(
        "vocabulary {} tokens, dim {}, {} epochs, final loss {:.4} -> {}",
        model.vocab().len(),
        model.dim(),
        report.epoch_losses.len(),
        report.epoch_losses.last().copied().unwrap_or(0.0),
        out.display()
    );
    Ok(())
}

fn index(provider: &ProviderArgs, corpus: &Path, quran: &Path, out: &Path) -> Result<(), CliError> {
    let provider = provider.open()?;
    let (_, aligned) = load_aligned(corpus, quran, false)?;
    let (index, report) = build_index(&aligned, provider.as_ref())?;
    persist_index(&index, out)?;
    for (id, n) in index.counts_by_tafsir() {
        println!("{id}: {n} entries");
    }
    for (id, key) in &report.skipped {
        eprintln!("skipped {id} {key}: no embeddable tokens");
    }
    println!("{} entries, provider {} -> {}", index.len(), index.provider_name(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn search(
    index: &Path,
    quran: &Path,
    query: String,
    k: i64,
    tafsirs: Vec<String>,
    provider: &ProviderArgs,
    corpus: Option<&Path>,
    json: bool,
) -> Result<(), CliError> {
    let quran = Arc::new(load_quran_text(quran, false)?);
    let engine = open_engine(index, provider.open()?, quran.clone(), corpus)?;
    let state = AppState::with_engine(quran, engine);
    let req = SearchRequest {
        query,
        k,
        tafsirs: (!tafsirs.is_empty()).then_some(tafsirs),
    };
    let resp = api::handle_search(&state, &req).map_err(|e| match e.status {
        400 => CliError::Usage(e.message),
        _ => CliError::Data(format!("{}: {}", e.code, e.message)),
    })?;
    if json {
        println!("{}", serde_json::to_string_pretty(&resp).expect("response serializes"));
        return Ok(());
    }
    for (rank, h) in resp.hits.iter().enumerate() {
        println!("{:>3}. {:.2}  {}  {}:{}", rank + 1, h.score, h.tafsir_id, h.surah, h.ayah);
        println!("     {}", h.ayah_text);
        if !h.tafsir_excerpt.is_empty() {
            println!("     {}", h.tafsir_excerpt);
        }
    }
    Ok(())
}

fn eval(
    index: &Path,
    prompts: &Path,
    out: &Path,
    quran: &Path,
    provider: &ProviderArgs,
    format: &str,
) -> Result<(), CliError> {
    let format: ReportFormat = format.parse().map_err(CliError::Usage)?;
    let quran = Arc::new(load_quran_text(quran, false)?);
    let engine = open_engine(index, provider.open()?, quran, None)?;
    let prompts = load_topic_prompts(prompts)?;
    let report = run_eval(&prompts, &engine);
    write_file(out, &render_report(&report, format))?;
    for ((model, tafsir), t) in report.tallies() {
        println!("{model} {tafsir}: accurate {}/{}, acceptable {}/{}", t.accurate, t.prompts, t.acceptable, t.prompts);
    }
    let flagged = report.outcomes.values().flatten().filter(|o| o.flag.is_some()).count();
    if flagged > 0 {
        eprintln!("{flagged} prompt/tafsir pairs flagged; see the report");
    }
    Ok(())
}

fn serve(
    index: PathBuf,
    quran: &Path,
    addr: &str,
    provider: &ProviderArgs,
    corpus: Option<PathBuf>,
) -> Result<(), CliError> {
    let quran = Arc::new(load_quran_text(quran, false)?);
    let provider = provider.open()?;
    let engine = open_engine(&index, provider.clone(), quran.clone(), corpus.as_deref())?;
    let state = Arc::new(AppState::with_engine(quran.clone(), engine));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Io(format!("{addr}: {e}")))?;
        #[cfg(unix)]
        {
            let state = state.clone();
            tokio::spawn(async move {
                use tokio::signal::unix::{signal, SignalKind};
                let Ok(mut hup) = signal(SignalKind::hangup()) else {
                    return;
                };
                while hup.recv().await.is_some() {
                    let (index, provider, quran, corpus) =
                        (index.clone(), provider.clone(), quran.clone(), corpus.clone());
                    let loaded = tokio::task::spawn_blocking(move || {
                        open_engine(&index, provider, quran, corpus.as_deref())
                    })
                    .await;
                    match loaded {
                        Ok(Ok(engine)) => {
                            let n = engine.index().len();
                            state.swap(engine);
                            tracing::info!(entries = n, "index reloaded");
                        }
                        Ok(Err(e)) => tracing::error!("reload failed, keeping current index: {e}"),
                        Err(e) => tracing::error!("reload task failed: {e}"),
                    }
                }
            });
        }
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        crate::http::serve(listener, state, shutdown)
            .await
            .map_err(|e| CliError::Io(e.to_string()))
    })
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest {
            corpus,
            quran,
            out,
            topics,
            partial_quran,
        } => ingest(&corpus, &quran, &out, &topics, partial_quran),
        Command::Train {
            corpus,
            config,
            out,
            overrides,
        } => train(&corpus, config.as_deref(), &out, &overrides),
        Command::Index {
            provider,
            corpus,
            quran,
            out,
        } => index(&provider, &corpus, &quran, &out),
        Command::Search {
            index,
            quran,
            query,
            k,
            tafsirs,
            provider,
            corpus,
            json,
        } => search(&index, &quran, query, k, tafsirs, &provider, corpus.as_deref(), json),
        Command::Eval {
            index,
            prompts,
            out,
            quran,
            provider,
            format,
        } => eval(&index, &prompts, &out, &quran, &provider, &format),
        Command::Serve {
            index,
            quran,
            addr,
            provider,
            corpus,
        } => serve(index, &quran, &addr, &provider, corpus),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
