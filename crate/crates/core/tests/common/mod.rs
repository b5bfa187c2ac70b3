#![allow(dead_code)]

use std::cmp::Ordering;
use std::path::PathBuf;

use qsearch_core::corpus::VerseKey;
use qsearch_core::embedding::{
    cbow_loss_and_grad, CbowGradient, CbowParams, DocVector, EmbedError, EmbeddingProvider,
    TrainingConfig,
};
use qsearch_core::index::VectorIndex;
use qsearch_core::textnorm::TokenSequence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub const CLUSTER_A: [&str; 5] = ["alpha", "beta", "gamma", "delta", "epsilon"];
pub const CLUSTER_B: [&str; 5] = ["one", "two", "three", "four", "five"];

/// 200 sentences per cluster, each 10 tokens drawn from a single cluster.
pub fn toy_corpus() -> Vec<TokenSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out = Vec::with_capacity(400);
    for _ in 0..200 {
        for words in [&CLUSTER_A, &CLUSTER_B] {
            out.push((0..10).map(|_| words[rng.random_range(0..5)]).collect());
        }
    }
    out
}

pub fn toy_config() -> TrainingConfig {
    TrainingConfig {
        dim: 16,
        epochs: 20,
        seed: 42,
        ..TrainingConfig::default()
    }
}

fn cos64(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for i in 0..a.len() {
        dot += a[i] as f64 * b[i] as f64;
        na += a[i] as f64 * a[i] as f64;
        nb += b[i] as f64 * b[i] as f64;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Mean cosine over distinct intra-cluster pairs minus mean over
/// inter-cluster pairs, using input vectors.
pub fn cluster_gap(vec_of: impl Fn(&str) -> Vec<f32>) -> f64 {
    let mut intra = Vec::new();
    for cluster in [&CLUSTER_A, &CLUSTER_B] {
        for i in 0..5 {
            for j in i + 1..5 {
                intra.push(cos64(&vec_of(cluster[i]), &vec_of(cluster[j])));
            }
        }
    }
    let mut inter = Vec::new();
    for a in CLUSTER_A {
        for b in CLUSTER_B {
            inter.push(cos64(&vec_of(a), &vec_of(b)));
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    mean(&intra) - mean(&inter)
}

/// Worst relative error between the analytic gradient and central finite
/// differences over every touched parameter, for one random draw.
pub fn gradient_check(rng: &mut ChaCha8Rng, dim: usize, eps: f64, floor: f64) -> f64 {
    let v = 12;
    let w_in: Vec<f64> = (0..v * dim).map(|_| rng.random_range(-0.5..0.5)).collect();
    let w_out: Vec<f64> = (0..v * dim).map(|_| rng.random_range(-0.5..0.5)).collect();
    let params = CbowParams::from_parts(v, dim, w_in, w_out).unwrap();
    let center = rng.random_range(0..v as u32);
    let ctx_len = rng.random_range(1..=4);
    let context: Vec<u32> = (0..ctx_len).map(|_| rng.random_range(0..v as u32)).collect();
    let negatives: Vec<u32> = (0..5)
        .map(|_| loop {
            let n = rng.random_range(0..v as u32);
            if n != center {
                break n;
            }
        })
        .collect();
    let (_, grad): (f64, CbowGradient<f64>) =
        cbow_loss_and_grad(&params, center, &context, &negatives).unwrap();

    let loss_at = |p: &CbowParams<f64>| cbow_loss_and_grad(p, center, &context, &negatives).unwrap().0;
    let mut worst = 0.0f64;
    let mut check = |input: bool, id: u32, g: &[f64]| {
        for (c, &analytic) in g.iter().enumerate() {
            let at = id as usize * dim + c;
            let mut plus = params.clone();
            let mut minus = params.clone();
            if input {
                plus.input_mut()[at] += eps;
                minus.input_mut()[at] -= eps;
            } else {
                plus.output_mut()[at] += eps;
                minus.output_mut()[at] -= eps;
            }
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * eps);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor);
            worst = worst.max(rel);
        }
    };
    for (id, g) in &grad.input {
        check(true, *id, g);
    }
    for (id, g) in &grad.output {
        check(false, *id, g);
    }
    worst
}

/// Embeds by hashing tokens into fixed random directions. Tokens made only
/// of punctuation or diacritics produce no vector.
pub struct HashProvider {
    pub dim: usize,
}

impl EmbeddingProvider for HashProvider {
    fn name(&self) -> &str {
        "hash"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn embed(&self, text: &str) -> Result<DocVector, EmbedError> {
        let mut sum = vec![0.0f64; self.dim];
        let mut n = 0;
        for tok in text.split_whitespace() {
            if !tok.chars().any(char::is_alphanumeric) {
                continue;
            }
            let seed = tok.bytes().fold(1469598103934665603u64, |h, b| {
                (h ^ b as u64).wrapping_mul(1099511628211)
            });
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for s in &mut sum {
                *s += rng.random_range(-1.0..1.0);
            }
            n += 1;
        }
        if n == 0 {
            return Err(EmbedError::EmptyEmbedding);
        }
        DocVector::normalized(&sum).ok_or(EmbedError::EmptyEmbedding)
    }
}

pub fn random_unit(rng: &mut impl Rng, dim: usize) -> Vec<f32> {
    loop {
        let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if let Some(v) = DocVector::normalized(&raw) {
            return v.into_inner();
        }
    }
}

/// Random index whose vectors come from a small pool so exact score ties
/// are common, with keys drawn from a narrow range so key ties are too.
pub fn random_index(rng: &mut ChaCha8Rng, entries: usize, dim: usize) -> VectorIndex {
    let pool: Vec<Vec<f32>> = (0..rng.random_range(1..=8)).map(|_| random_unit(rng, dim)).collect();
    let tafsirs = ["abdu", "alkashaf", "altasheel", "samarqandi"];
    let mut idx = VectorIndex::new("rand", dim).unwrap();
    for _ in 0..entries {
        let key = VerseKey::new(rng.random_range(1..=3), rng.random_range(1..=5)).unwrap();
        let tafsir = tafsirs[rng.random_range(0..tafsirs.len())];
        let v = &pool[rng.random_range(0..pool.len())];
        idx.push(tafsir, key, v).unwrap();
    }
    idx
}

/// Brute-force ranking: score every entry, full stable sort, truncate.
pub fn oracle_ranking(
    idx: &VectorIndex,
    query: &[f32],
    k: usize,
    filter: Option<&[String]>,
) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = idx
        .entries()
        .enumerate()
        .filter(|(_, e)| filter.is_none_or(|f| f.is_empty() || f.iter().any(|t| t == e.tafsir_id)))
        .map(|(i, e)| (i, cos64(query, e.vector).clamp(-1.0, 1.0)))
        .collect();
    all.sort_by(|a, b| {
        let (ea, eb) = (idx.entry(a.0), idx.entry(b.0));
        match b.1.partial_cmp(&a.1).unwrap() {
            Ordering::Equal => ea
                .key
                .encode()
                .cmp(&eb.key.encode())
                .then(ea.tafsir_id.cmp(eb.tafsir_id)),
            o => o,
        }
    });
    all.truncate(k);
    all
}
