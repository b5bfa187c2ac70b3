mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::*;
use qsearch_core::corpus::{
    align_corpus, export_alignment_table, load_quran_text, load_tafsir_corpus, load_topic_index,
    merge_topic_indexes, read_alignment_table, AlignedCorpus, AlignedRow, Quran, VerseKey,
};
use qsearch_core::embedding::{train_cbow, EmbeddingModel, LocalProvider, TrainingConfig};
use qsearch_core::eval::{load_topic_prompts, render_report, run_eval, ReportFormat};
use qsearch_core::index::{
    build_index, persist_index, restore_index, CommentaryStore, IndexError, SearchEngine,
};
use qsearch_core::textnorm::{preprocess_document, NormalizationConfig, TokenSequence};

fn quran() -> Quran {
    load_quran_text(fixtures().join("quran/quran-hafs.txt"), true).unwrap()
}

fn aligned() -> AlignedCorpus {
    let corpus = load_tafsir_corpus(fixtures().join("tafsir")).unwrap();
    align_corpus(&corpus, &quran()).unwrap()
}

fn fixture_model() -> EmbeddingModel {
    let corpus = load_tafsir_corpus(fixtures().join("tafsir")).unwrap();
    let cfg = NormalizationConfig::default();
    let docs: Vec<TokenSequence> = corpus
        .values()
        .flatten()
        .map(|e| preprocess_document(&e.commentary, &cfg))
        .collect();
    let training = TrainingConfig {
        dim: 32,
        epochs: 30,
        min_count: 1,
        ..TrainingConfig::default()
    };
    train_cbow(&docs, &training, cfg).unwrap()
}

fn engine(model: EmbeddingModel) -> SearchEngine {
    let aligned = aligned();
    let provider = Arc::new(LocalProvider::new(model));
    let (index, report) = build_index(&aligned, provider.as_ref()).unwrap();
    assert!(report.skipped.is_empty());
    let store = CommentaryStore::from_alignments(&aligned, &NormalizationConfig::default());
    SearchEngine::new(index, provider, Arc::new(quran()), store).unwrap()
}

#[test]
fn quran_fixture_is_canonical() {
    let q = quran();
    assert_eq!(q.len(), 6236);
    assert_eq!(q.surah_count(), 114);
    assert!(q
        .text(VerseKey::new(2, 30).unwrap())
        .unwrap()
        .starts_with("وإذ قال ربك للملائكة"));
}

#[test]
fn surah_102_expands_to_eight_rows_and_round_trips() {
    let aligned = aligned();
    assert_eq!(aligned.len(), 4);
    for id in ["alkashaf", "ibn-atiyah", "samarqandi"] {
        let rows = &aligned[id];
        assert_eq!(rows.len(), 8, "{id}");
        let keys: Vec<u32> = rows.iter().map(|r| r.key.encode()).collect();
        assert_eq!(keys, (102_001..=102_008).collect::<Vec<_>>());
    }
    assert_eq!(aligned["almukhtasar"].len(), 1);

    let tmp = tempfile::tempdir().unwrap();
    for (id, rows) in &aligned {
        let path = export_alignment_table(rows, tmp.path(), id).unwrap();
        let back = read_alignment_table(&path).unwrap();
        let again: Vec<(String, String)> = back.into_iter().map(|r| (r.ayah, r.tafsir)).collect();
        let want: Vec<(String, String)> = rows
            .iter()
            .map(|r| (r.ayah_text.clone(), r.tafsir_text.clone()))
            .collect();
        assert_eq!(again, want, "{id}");
    }
}

#[test]
fn topic_indexes_merge_case_insensitively() {
    let a = load_topic_index(fixtures().join("topics/searchtruth.tsv")).unwrap();
    let b = load_topic_index(fixtures().join("topics/quranic-corpus.tsv")).unwrap();
    let merged = merge_topic_indexes(&a, &b);
    let adam: Vec<String> = merged.get("adam").unwrap().iter().map(|k| k.to_string()).collect();
    assert_eq!(adam, ["2:30", "2:31", "2:34", "2:35", "7:11"]);
    let wealth: Vec<String> = merged.get("wealth").unwrap().iter().map(|k| k.to_string()).collect();
    assert_eq!(wealth, ["2:188", "4:5", "4:29", "18:46"]);
}

#[test]
fn forgiveness_prompt_matches_golden_tokens() {
    let prompts = load_topic_prompts(fixtures().join("prompts.tsv")).unwrap();
    let p = prompts.iter().find(|p| p.topic == "Forgiveness").unwrap();
    let golden = std::fs::read_to_string(fixtures().join("golden/forgiveness.tokens")).unwrap();
    let toks = preprocess_document(&p.prompt_text, &NormalizationConfig::default());
    assert_eq!(toks.tokens(), golden.lines().collect::<Vec<_>>());
}

#[test]
fn every_fixture_commentary_retrieves_itself() {
    let engine = engine(fixture_model());
    let aligned = aligned();
    let mut checked = 0;
    for (id, rows) in &aligned {
        for row in rows {
            let hits = engine.search(&row.tafsir_text, 25, None).unwrap();
            let top = &hits[0];
            assert_eq!(&top.tafsir_id, id);
            assert!((top.score - 1.0).abs() < 1e-6, "{id} {}: {}", row.key, top.score);
            let own = hits
                .iter()
                .find(|h| &h.tafsir_id == id && h.key == row.key)
                .expect("own entry retrieved");
            assert!((own.score - 1.0).abs() < 1e-6);
            checked += 1;
        }
    }
    assert_eq!(checked, 25);
}

#[test]
fn index_round_trip_gives_identical_hits() {
    let engine = engine(fixture_model());
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("fixture.qsix");
    persist_index(engine.index(), &path).unwrap();
    let restored = restore_index(&path).unwrap();
    assert_eq!(&restored, engine.index());
}

#[test]
fn all_diacritics_prompt_has_no_searchable_terms() {
    let engine = engine(fixture_model());
    assert!(matches!(
        engine.search("\u{064E}\u{0650}\u{0651}", 5, None),
        Err(IndexError::NoSearchableTerms)
    ));
    assert!(matches!(
        engine.search("التكاثر", 5, Some(&["nope".to_string()])),
        Err(IndexError::UnknownTafsir(_))
    ));
}

#[test]
fn planted_prompts_give_three_accurate_for_one_tafsir() {
    let q = quran();
    let plant = [
        ("Forgiveness", "7:199", "خذ العفو وأمر بالعرف وأعرض عن الجاهلين"),
        ("War", "2:190", "قاتلوا في سبيل الله الذين يقاتلونكم ولا تعتدوا"),
        ("Knowledge", "39:18", "الذين يستمعون القول فيتبعون أحسنه"),
    ];
    let mut corpus = AlignedCorpus::new();
    let rows: Vec<AlignedRow> = plant
        .iter()
        .map(|(_, k, text)| {
            let key: VerseKey = k.parse().unwrap();
            AlignedRow {
                key,
                ayah_text: q.text(key).unwrap().to_string(),
                tafsir_text: text.to_string(),
            }
        })
        .collect();
    corpus.insert("altasheel".into(), rows);
    corpus.insert(
        "abdu".into(),
        vec![AlignedRow {
            key: "4:29".parse().unwrap(),
            ayah_text: String::new(),
            tafsir_text: "لا تأكلوا أموالكم بينكم بالباطل".into(),
        }],
    );
    let provider = Arc::new(HashProvider { dim: 24 });
    let (index, _) = build_index(&corpus, provider.as_ref()).unwrap();
    let engine = SearchEngine::new(index, provider, Arc::new(q), CommentaryStore::default()).unwrap();

    let tsv: String = plant
        .iter()
        .map(|(topic, key, text)| format!("{topic}\t{text}\taltasheel\t{key}\tHigh\n"))
        .chain(["Forgiveness\tخذ العفو وأمر بالعرف وأعرض عن الجاهلين\tabdu\t4:29\tMedium\n".into()])
        .collect();
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("prompts.tsv");
    std::fs::write(&path, tsv).unwrap();
    let prompts = load_topic_prompts(&path).unwrap();

    let report = run_eval(&prompts, &engine);
    let t = report.tally("hash", "altasheel");
    assert_eq!((t.prompts, t.accurate, t.acceptable), (3, 3, 3));
    let abdu = report.tally("hash", "abdu");
    assert_eq!((abdu.accurate, abdu.acceptable), (0, 1));
    for o in &report.outcomes["hash"] {
        if o.tafsir_id == "altasheel" {
            assert!((o.hit.unwrap().1 - 1.0).abs() < 1e-6);
        }
    }

    let text = render_report(&report, ReportFormat::TextTable);
    assert!(text.contains("Tafsir     Cosine Similarity  Result  Actual Relevancy"), "{text}");
    assert!(text.contains("altasheel  1.00               7:199   High"), "{text}");
}

#[test]
fn fixture_prompts_load_with_expected_gold() {
    let prompts = load_topic_prompts(fixtures().join("prompts.tsv")).unwrap();
    let fin = prompts.iter().find(|p| p.topic == "Financial Relations").unwrap();
    let abdu: Vec<_> = fin.gold.iter().filter(|g| g.tafsir_id == "abdu").collect();
    assert_eq!(abdu.len(), 1);
    assert_eq!(abdu[0].key.to_string(), "4:29");
    assert_eq!(abdu[0].relevancy, qsearch_core::eval::Relevancy::High);
    let topics: BTreeSet<&str> = prompts.iter().map(|p| p.topic.as_str()).collect();
    assert!(topics.len() >= 6);
}
