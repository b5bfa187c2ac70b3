//! Index build and exact search, rayon versus sequential.
//!
//! `cargo bench -p qsearch-core` measures the rayon build (also pinned to a
//! one-thread pool); `cargo bench -p qsearch-core --no-default-features`
//! measures the sequential fallback under its own ids.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use qsearch_core::corpus::{AlignedCorpus, AlignedRow, VerseKey};
use qsearch_core::embedding::{train_cbow, DocVector, LocalProvider, TrainingConfig};
use qsearch_core::index::{build_index, VectorIndex};
use qsearch_core::textnorm::{NormalizationConfig, TokenSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mode() -> &'static str {
    if qsearch_core::is_parallel() {
        "rayon"
    } else {
        "sequential"
    }
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    DocVector::normalized(&raw).unwrap().into_inner()
}

fn random_index(entries: usize, dim: usize) -> VectorIndex {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut idx = VectorIndex::new("bench", dim).unwrap();
    for i in 0..entries {
        let key = VerseKey::new((i % 114) as u16 + 1, (i / 114 % 280) as u16 + 1).unwrap();
        idx.push(["a", "b", "c", "d"][i % 4], key, &unit(&mut rng, dim)).unwrap();
    }
    idx
}

fn word(rng: &mut ChaCha8Rng) -> String {
    let letters: Vec<char> = "ابتثجحخدذرزسشصضطظعغفقكلمنهوي".chars().collect();
    (0..rng.random_range(3..7))
        .map(|_| letters[rng.random_range(0..letters.len())])
        .collect()
}

fn corpus(rows: usize) -> (AlignedCorpus, Vec<TokenSequence>) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let vocab: Vec<String> = (0..2000).map(|_| word(&mut rng)).collect();
    let mut aligned = AlignedCorpus::new();
    let mut docs = Vec::new();
    for t in 0..4 {
        let mut out = Vec::new();
        for i in 0..rows / 4 {
            let text: Vec<&str> = (0..120)
                .map(|_| vocab[rng.random_range(0..vocab.len())].as_str())
                .collect();
            docs.push(text.iter().copied().collect());
            out.push(AlignedRow {
                key: VerseKey::new((i % 114) as u16 + 1, (i / 114) as u16 + 1).unwrap(),
                ayah_text: String::new(),
                tafsir_text: text.join(" "),
            });
        }
        aligned.insert(format!("t{t}"), out);
    }
    (aligned, docs)
}

fn bench_search(c: &mut Criterion) {
    let mut g = c.benchmark_group("search");
    for entries in [10_000usize, 100_000] {
        let idx = random_index(entries, 100);
        let q = unit(&mut ChaCha8Rng::seed_from_u64(9), 100);
        g.throughput(Throughput::Elements(entries as u64));
        g.bench_with_input(BenchmarkId::new(mode(), entries), &idx, |b, idx| {
            b.iter(|| idx.search_vector(&q, 10, None).unwrap())
        });
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            g.bench_with_input(BenchmarkId::new("rayon-1-thread", entries), &idx, |b, idx| {
                b.iter(|| pool.install(|| idx.search_vector(&q, 10, None).unwrap()))
            });
        }
    }
    g.finish();
}

fn bench_build(c: &mut Criterion) {
    let (aligned, docs) = corpus(2000);
    let cfg = TrainingConfig {
        dim: 64,
        epochs: 1,
        min_count: 1,
        ..TrainingConfig::default()
    };
    let provider = LocalProvider::new(train_cbow(&docs, &cfg, NormalizationConfig::default()).unwrap());
    let mut g = c.benchmark_group("build_index");
    g.sample_size(10);
    g.throughput(Throughput::Elements(2000));
    g.bench_function(mode(), |b| b.iter(|| build_index(&aligned, &provider).unwrap()));
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        g.bench_function("rayon-1-thread", |b| {
            b.iter(|| pool.install(|| build_index(&aligned, &provider).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_search, bench_build);
criterion_main!(benches);
