//! Labeled topic prompts, top-1 evaluation per tafsir, and the
//! accuracy/acceptability report.

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::VerseKey;
use crate::index::{IndexError, SearchEngine};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relevancy {
    High,
    Medium,
    Low,
}

impl Relevancy {
    pub fn is_acceptable(self) -> bool {
        matches!(self, Relevancy::High | Relevancy::Medium)
    }
}

impl fmt::Display for Relevancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relevancy::High => "High",
            Relevancy::Medium => "Medium",
            Relevancy::Low => "Low",
        })
    }
}

impl FromStr for Relevancy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Ok(Relevancy::High),
            "medium" => Ok(Relevancy::Medium),
            "low" => Ok(Relevancy::Low),
            _ => Err(format!("unknown relevancy {s:?}; expected High, Medium or Low")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldEntry {
    pub tafsir_id: String,
    pub key: VerseKey,
    pub relevancy: Relevancy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicPrompt {
    pub topic: String,
    pub prompt_text: String,
    pub gold: Vec<GoldEntry>,
}

impl TopicPrompt {
    /// Tafsirs with at least one gold label, in first-appearance order.
    pub fn tafsirs(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.gold
            .iter()
            .map(|g| g.tafsir_id.as_str())
            .filter(|t| seen.insert(*t))
            .collect()
    }

    /// Gold label of `key` for `tafsir_id`. When a key is labeled twice the
    /// stronger label wins.
    pub fn relevancy(&self, tafsir_id: &str, key: VerseKey) -> Option<Relevancy> {
        self.gold
            .iter()
            .filter(|g| g.tafsir_id == tafsir_id && g.key == key)
            .map(|g| g.relevancy)
            .min()
    }
}

/// Parses `topic<TAB>prompt<TAB>tafsir<TAB>s:a<TAB>relevancy` rows. Rows
/// sharing topic and prompt text form one prompt.
pub fn parse_topic_prompts(source: &str) -> Result<Vec<TopicPrompt>, EvalError> {
    let mut prompts: Vec<TopicPrompt> = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| EvalError::Parse { line, message };
        let text = raw.trim_end_matches('\r');
        if text.trim().is_empty() || text.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split('\t').map(str::trim).collect();
        let [topic, prompt_text, tafsir_id, key, relevancy] = fields[..] else {
            return Err(err(format!("expected 5 tab-separated fields, found {}", fields.len())));
        };
        if topic.is_empty() || prompt_text.is_empty() || tafsir_id.is_empty() {
            return Err(err("topic, prompt and tafsir must be non-empty".into()));
        }
        let key: VerseKey = key.parse().map_err(|e| err(format!("{e}")))?;
        let relevancy: Relevancy = relevancy.parse().map_err(err)?;
        if !seen.insert((topic.to_string(), tafsir_id.to_string(), key)) {
            return Err(err(format!("duplicate gold row for {topic} / {tafsir_id} / {key}")));
        }
        let gold = GoldEntry {
            tafsir_id: tafsir_id.to_string(),
            key,
            relevancy,
        };
        match prompts
            .iter_mut()
            .find(|p| p.topic == topic && p.prompt_text == prompt_text)
        {
            Some(p) => p.gold.push(gold),
            None => prompts.push(TopicPrompt {
                topic: topic.to_string(),
                prompt_text: prompt_text.to_string(),
                gold: vec![gold],
            }),
        }
    }
    Ok(prompts)
}

pub fn load_topic_prompts(path: impl AsRef<Path>) -> Result<Vec<TopicPrompt>, EvalError> {
    let path = path.as_ref();
    let source = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_topic_prompts(&source)
}

/// Result of one (prompt, tafsir) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub topic: String,
    pub tafsir_id: String,
    /// Top-1 key and score within the tafsir.
    pub hit: Option<(VerseKey, f64)>,
    /// Gold label of the retrieved key, if it has one.
    pub relevancy: Option<Relevancy>,
    pub accurate: bool,
    pub acceptable: bool,
    /// Why no hit was retrieved.
    pub flag: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub prompts: usize,
    pub accurate: usize,
    pub acceptable: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Outcomes per model, in evaluation order.
    pub outcomes: BTreeMap<String, Vec<Outcome>>,
}

impl EvalReport {
    /// Accurate and acceptable counts keyed by (model, tafsir).
    pub fn tallies(&self) -> BTreeMap<(String, String), Tally> {
        let mut out: BTreeMap<(String, String), Tally> = BTreeMap::new();
        for (model, outcomes) in &self.outcomes {
            for o in outcomes {
                let t = out.entry((model.clone(), o.tafsir_id.clone())).or_default();
                t.prompts += 1;
                t.accurate += usize::from(o.accurate);
                t.acceptable += usize::from(o.acceptable);
            }
        }
        out
    }

    pub fn tally(&self, model: &str, tafsir_id: &str) -> Tally {
        self.tallies()
            .remove(&(model.to_string(), tafsir_id.to_string()))
            .unwrap_or_default()
    }

    /// Adds another model's outcomes. Outcomes for a model already present
    /// are appended.
    pub fn merge(&mut self, other: EvalReport) {
        for (model, outcomes) in other.outcomes {
            self.outcomes.entry(model).or_default().extend(outcomes);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.values().all(Vec::is_empty)
    }
}

/// Retrieves the top-1 verse within each gold-labeled tafsir of every prompt.
/// The report is filed under the engine's provider name.
pub fn run_eval(prompts: &[TopicPrompt], engine: &SearchEngine) -> EvalReport {
    let jobs: Vec<(&TopicPrompt, &str)> = prompts
        .iter()
        .flat_map(|p| p.tafsirs().into_iter().map(move |t| (p, t)))
        .collect();
    let outcomes = crate::par::map_slice(&jobs, |&(p, tafsir)| evaluate_one(p, tafsir, engine));
    let mut report = EvalReport::default();
    report
        .outcomes
        .insert(engine.provider().name().to_string(), outcomes);
    report
}

fn evaluate_one(prompt: &TopicPrompt, tafsir: &str, engine: &SearchEngine) -> Outcome {
    let mut out = Outcome {
        topic: prompt.topic.clone(),
        tafsir_id: tafsir.to_string(),
        hit: None,
        relevancy: None,
        accurate: false,
        acceptable: false,
        flag: None,
    };
    let filter = [tafsir.to_string()];
    match engine.search(&prompt.prompt_text, 1, Some(&filter)) {
        Ok(hits) => match hits.first() {
            Some(hit) => {
                out.hit = Some((hit.key, hit.score));
                out.relevancy = prompt.relevancy(tafsir, hit.key);
                out.accurate = out.relevancy == Some(Relevancy::High);
                out.acceptable = out.relevancy.is_some_and(Relevancy::is_acceptable);
            }
            None => out.flag = Some("no entries for this tafsir".into()),
        },
        Err(IndexError::NoSearchableTerms) => out.flag = Some("no searchable terms".into()),
        Err(IndexError::UnknownTafsir(_)) => out.flag = Some("tafsir not indexed".into()),
        Err(e) => out.flag = Some(e.to_string()),
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    TextTable,
    Delimited,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" | "text-table" => Ok(ReportFormat::TextTable),
            "tsv" | "delimited" => Ok(ReportFormat::Delimited),
            _ => Err(format!("unknown report format {s:?}")),
        }
    }
}

const DETAIL_HEADER: [&str; 4] = ["Tafsir", "Cosine Similarity", "Result", "Actual Relevancy"];
const SUMMARY_HEADER: [&str; 4] = ["Model", "Tafsir", "Accurate", "Acceptable"];

fn detail_cells(o: &Outcome) -> [String; 4] {
    let (score, result) = match (o.hit, &o.flag) {
        (Some((key, score)), _) => (format!("{score:.2}"), key.to_string()),
        (None, Some(flag)) => ("-".into(), format!("({flag})")),
        (None, None) => ("-".into(), "-".into()),
    };
    let relevancy = o.relevancy.map_or_else(|| "-".to_string(), |r| r.to_string());
    [o.tafsir_id.clone(), score, result, relevancy]
}

fn text_table(out: &mut String, header: [&str; 4], rows: &[[String; 4]]) {
    let mut width = header.map(|h| h.chars().count());
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: [&str; 4]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(width)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let _ = writeln!(out, "{}", line(header));
    let _ = writeln!(out, "{}", line(width.map(|w| "-".repeat(w)).each_ref().map(String::as_str)));
    for row in rows {
        let _ = writeln!(out, "{}", line(row.each_ref().map(String::as_str)));
    }
}

/// Renders per-topic tables followed by the per-model summary. Scores are
/// shown with two decimals.
pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    let mut out = String::new();
    let summary: Vec<[String; 4]> = report
        .tallies()
        .into_iter()
        .map(|((model, tafsir), t)| [model, tafsir, t.accurate.to_string(), t.acceptable.to_string()])
        .collect();
    match format {
        ReportFormat::TextTable => {
            let mut any = false;
            for (model, outcomes) in &report.outcomes {
                let mut topics: Vec<&str> = Vec::new();
                for o in outcomes {
                    if !topics.contains(&o.topic.as_str()) {
                        topics.push(&o.topic);
                    }
                }
                for topic in topics {
                    any = true;
                    let rows: Vec<[String; 4]> = outcomes
                        .iter()
                        .filter(|o| o.topic == topic)
                        .map(detail_cells)
                        .collect();
                    let _ = writeln!(out, "{topic} ({model})");
                    text_table(&mut out, DETAIL_HEADER, &rows);
                    out.push('\n');
                }
            }
            if !any {
                text_table(&mut out, DETAIL_HEADER, &[]);
                out.push('\n');
            }
            text_table(&mut out, SUMMARY_HEADER, &summary);
        }
        ReportFormat::Delimited => {
            let _ = writeln!(out, "Model\tTopic\t{}", DETAIL_HEADER.join("\t"));
            for (model, outcomes) in &report.outcomes {
                for o in outcomes {
                    let _ = writeln!(out, "{model}\t{}\t{}", o.topic, detail_cells(o).join("\t"));
                }
            }
            out.push('\n');
            let _ = writeln!(out, "{}", SUMMARY_HEADER.join("\t"));
            for row in &summary {
                let _ = writeln!(out, "{}", row.join("\t"));
            }
        }
    }
    out
}
