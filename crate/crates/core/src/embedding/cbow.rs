use num_traits::Float;
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use super::{build_vocabulary, EmbedError, EmbeddingModel, TrainingConfig, Vocabulary};
use crate::textnorm::{NormalizationConfig, TokenSequence};

/// Input and output embedding matrices, both `vocab_size x dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CbowParams<T> {
    vocab_size: usize,
    dim: usize,
    w_in: Vec<T>,
    w_out: Vec<T>,
}

impl<T: Float> CbowParams<T> {
    pub fn zeros(vocab_size: usize, dim: usize) -> Self {
        CbowParams {
            vocab_size,
            dim,
            w_in: vec![T::zero(); vocab_size * dim],
            w_out: vec![T::zero(); vocab_size * dim],
        }
    }

    pub fn from_parts(
        vocab_size: usize,
        dim: usize,
        w_in: Vec<T>,
        w_out: Vec<T>,
    ) -> Result<Self, EmbedError> {
        let n = vocab_size * dim;
        if w_in.len() != n || w_out.len() != n {
            return Err(EmbedError::Domain(format!(
                "matrices must hold {vocab_size}x{dim} values, got {} and {}",
                w_in.len(),
                w_out.len()
            )));
        }
        Ok(CbowParams {
            vocab_size,
            dim,
            w_in,
            w_out,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn input(&self) -> &[T] {
        &self.w_in
    }

    pub fn output(&self) -> &[T] {
        &self.w_out
    }

    pub fn input_mut(&mut self) -> &mut [T] {
        &mut self.w_in
    }

    pub fn output_mut(&mut self) -> &mut [T] {
        &mut self.w_out
    }

    pub fn input_row(&self, id: u32) -> &[T] {
        let i = id as usize * self.dim;
        &self.w_in[i..i + self.dim]
    }

    pub fn output_row(&self, id: u32) -> &[T] {
        let i = id as usize * self.dim;
        &self.w_out[i..i + self.dim]
    }

    pub fn all_finite(&self) -> bool {
        self.w_in.iter().chain(&self.w_out).all(|v| v.is_finite())
    }

    fn check_ids(&self, ids: &[u32]) -> Result<(), EmbedError> {
        match ids.iter().find(|&&id| id as usize >= self.vocab_size) {
            Some(id) => Err(EmbedError::Domain(format!(
                "token id {id} outside vocabulary of {}",
                self.vocab_size
            ))),
            None => Ok(()),
        }
    }
}

impl CbowParams<f32> {
    /// Input rows uniform in `(-0.5/dim, 0.5/dim)`, output rows zero.
    pub fn init_word2vec(vocab_size: usize, dim: usize, rng: &mut impl Rng) -> Self {
        let half = 0.5 / dim as f32;
        let dist = Uniform::new(-half, half).expect("dim >= 1 gives a non-empty range");
        let w_in = (0..vocab_size * dim).map(|_| dist.sample(rng)).collect();
        CbowParams {
            vocab_size,
            dim,
            w_in,
            w_out: vec![0.0; vocab_size * dim],
        }
    }
}

/// `ln σ(x)`, stable for large |x|.
pub fn log_sigmoid<T: Float>(x: T) -> T {
    if x >= T::zero() {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid<T: Float>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Gradients for the rows touched by one sample, one entry per distinct id
/// in first-seen order.
#[derive(Debug, Clone, PartialEq)]
pub struct CbowGradient<T> {
    pub input: Vec<(u32, Vec<T>)>,
    pub output: Vec<(u32, Vec<T>)>,
}

fn accumulate<T: Float>(rows: &mut Vec<(u32, Vec<T>)>, id: u32, scale: T, v: &[T]) {
    let slot = match rows.iter().position(|(r, _)| *r == id) {
        Some(i) => i,
        None => {
            rows.push((id, vec![T::zero(); v.len()]));
            rows.len() - 1
        }
    };
    for (g, &x) in rows[slot].1.iter_mut().zip(v) {
        *g = *g + scale * x;
    }
}

fn hidden<T: Float>(params: &CbowParams<T>, context: &[u32], h: &mut Vec<T>) {
    h.clear();
    h.resize(params.dim, T::zero());
    for &c in context {
        for (acc, &x) in h.iter_mut().zip(params.input_row(c)) {
            *acc = *acc + x;
        }
    }
    let n = T::from(context.len()).expect("context length fits the float type");
    for acc in h.iter_mut() {
        *acc = *acc / n;
    }
}

/// Negative-sampling CBOW objective for one (center, context) sample.
///
/// With `h` the mean of the context input rows:
/// `loss = -ln σ(out[center]·h) - Σ_n ln σ(-out[n]·h)`.
pub fn cbow_loss_and_grad<T: Float>(
    params: &CbowParams<T>,
    center: u32,
    context: &[u32],
    negatives: &[u32],
) -> Result<(T, CbowGradient<T>), EmbedError> {
    if context.is_empty() {
        return Err(EmbedError::Domain("CBOW sample needs a non-empty context".into()));
    }
    params.check_ids(&[center])?;
    params.check_ids(context)?;
    params.check_ids(negatives)?;

    let mut h = Vec::new();
    hidden(params, context, &mut h);
    let mut grad_h = vec![T::zero(); params.dim];
    let mut grad = CbowGradient {
        input: Vec::new(),
        output: Vec::new(),
    };
    let mut loss = T::zero();
    let targets = std::iter::once((center, T::one())).chain(negatives.iter().map(|&n| (n, T::zero())));
    for (target, label) in targets {
        let u = params.output_row(target);
        let x = dot(u, &h);
        loss = loss
            - if label > T::zero() {
                log_sigmoid(x)
            } else {
                log_sigmoid(-x)
            };
        let g = sigmoid(x) - label;
        accumulate(&mut grad.output, target, g, &h);
        for (gh, &ui) in grad_h.iter_mut().zip(u) {
            *gh = *gh + g * ui;
        }
    }
    let share = T::one() / T::from(context.len()).expect("context length fits the float type");
    for &c in context {
        accumulate(&mut grad.input, c, share, &grad_h);
    }
    Ok((loss, grad))
}

/// `params -= lr * grad`.
pub fn apply_gradient<T: Float>(params: &mut CbowParams<T>, grad: &CbowGradient<T>, lr: T) {
    let dim = params.dim;
    for (id, g) in &grad.input {
        let row = &mut params.w_in[*id as usize * dim..][..dim];
        for (w, &d) in row.iter_mut().zip(g) {
            *w = *w - lr * d;
        }
    }
    for (id, g) in &grad.output {
        let row = &mut params.w_out[*id as usize * dim..][..dim];
        for (w, &d) in row.iter_mut().zip(g) {
            *w = *w - lr * d;
        }
    }
}

/// Reusable buffers for [`sgd_step`].
#[derive(Debug, Default)]
pub struct StepScratch<T> {
    h: Vec<T>,
    grad_h: Vec<T>,
    coeffs: Vec<T>,
}

/// One in-place gradient step on a sample; returns the sample loss.
///
/// Equivalent to [`cbow_loss_and_grad`] followed by [`apply_gradient`]: all
/// coefficients are computed from the pre-update rows, so repeated ids
/// accumulate exactly as in the gradient. Ids are not range-checked.
pub fn sgd_step<T: Float>(
    params: &mut CbowParams<T>,
    center: u32,
    context: &[u32],
    negatives: &[u32],
    lr: T,
    scratch: &mut StepScratch<T>,
) -> T {
    debug_assert!(!context.is_empty());
    let dim = params.dim;
    let StepScratch { h, grad_h, coeffs } = scratch;
    hidden(params, context, h);
    grad_h.clear();
    grad_h.resize(dim, T::zero());
    coeffs.clear();

    let mut loss = T::zero();
    let targets = std::iter::once((center, T::one())).chain(negatives.iter().map(|&n| (n, T::zero())));
    for (target, label) in targets.clone() {
        let u = params.output_row(target);
        let x = dot(u, h);
        loss = loss
            - if label > T::zero() {
                log_sigmoid(x)
            } else {
                log_sigmoid(-x)
            };
        let g = sigmoid(x) - label;
        coeffs.push(g);
        for (gh, &ui) in grad_h.iter_mut().zip(u) {
            *gh = *gh + g * ui;
        }
    }
    for ((target, _), &g) in targets.zip(coeffs.iter()) {
        let row = &mut params.w_out[target as usize * dim..][..dim];
        for (w, &hi) in row.iter_mut().zip(h.iter()) {
            *w = *w - lr * (g * hi);
        }
    }
    let share = T::one() / T::from(context.len()).expect("context length fits the float type");
    for &c in context {
        let row = &mut params.w_in[c as usize * dim..][..dim];
        for (w, &gh) in row.iter_mut().zip(grad_h.iter()) {
            *w = *w - lr * (share * gh);
        }
    }
    loss
}

/// Per-epoch training statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean sample loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Samples (center positions with a non-empty context) per epoch.
    pub epoch_samples: Vec<u64>,
}

pub fn train_cbow(
    corpus: &[TokenSequence],
    cfg: &TrainingConfig,
    normalization: NormalizationConfig,
) -> Result<EmbeddingModel, EmbedError> {
    train_cbow_with_report(corpus, cfg, normalization).map(|(model, _)| model)
}

/// Probability of keeping each token under frequent-token subsampling.
fn keep_probabilities(vocab: &Vocabulary, t: f64) -> Vec<f64> {
    if t <= 0.0 {
        return vec![1.0; vocab.len()];
    }
    let threshold = t * vocab.total_count() as f64;
    vocab
        .counts()
        .iter()
        .map(|&c| {
            let c = c as f64;
            (((c / threshold).sqrt() + 1.0) * threshold / c).min(1.0)
        })
        .collect()
}

/// Trains CBOW with negative sampling on a single thread; the result is a
/// pure function of `(corpus, cfg, normalization)`.
pub fn train_cbow_with_report(
    corpus: &[TokenSequence],
    cfg: &TrainingConfig,
    normalization: NormalizationConfig,
) -> Result<(EmbeddingModel, TrainReport), EmbedError> {
    cfg.validate()?;
    let vocab = build_vocabulary(corpus, cfg.min_count)?;
    if vocab.len() < 2 {
        return Err(EmbedError::Train(
            "negative sampling needs at least two distinct tokens".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = CbowParams::init_word2vec(vocab.len(), cfg.dim, &mut rng);

    let sentences: Vec<Vec<u32>> = corpus
        .iter()
        .map(|doc| doc.iter().filter_map(|t| vocab.id(t)).collect())
        .collect();
    let words_per_epoch: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let total_words = (words_per_epoch * cfg.epochs as u64).max(1) as f64;
    let noise = WeightedIndex::new(vocab.counts().iter().map(|&c| (c as f64).powf(0.75)))
        .map_err(|e| EmbedError::Train(format!("noise distribution: {e}")))?;
    let keep = keep_probabilities(&vocab, cfg.subsample_t);
    let lr_span = cfg.initial_lr - cfg.min_lr;

    let mut report = TrainReport::default();
    let mut scratch = StepScratch::default();
    let mut kept: Vec<(u32, usize)> = Vec::new();
    let mut context: Vec<u32> = Vec::with_capacity(2 * cfg.window);
    let mut negatives: Vec<u32> = Vec::with_capacity(cfg.negatives);
    let mut words_done: u64 = 0;

    for epoch in 0..cfg.epochs {
        let mut loss_sum = 0.0f64;
        let mut samples = 0u64;
        for sentence in &sentences {
            kept.clear();
            for (pos, &id) in sentence.iter().enumerate() {
                if rng.random::<f64>() < keep[id as usize] {
                    kept.push((id, pos));
                }
            }
            for i in 0..kept.len() {
                let (center, pos) = kept[i];
                let width = rng.random_range(1..=cfg.window);
                context.clear();
                let lo = i.saturating_sub(width);
                let hi = (i + width).min(kept.len() - 1);
                context.extend((lo..=hi).filter(|&j| j != i).map(|j| kept[j].0));
                if context.is_empty() {
                    continue;
                }
                negatives.clear();
                while negatives.len() < cfg.negatives {
                    let n = noise.sample(&mut rng) as u32;
                    if n != center {
                        negatives.push(n);
                    }
                }
                let progress = (words_done + pos as u64) as f64 / total_words;
                let lr = (cfg.initial_lr - lr_span * progress).max(cfg.min_lr) as f32;
                let loss = sgd_step(&mut params, center, &context, &negatives, lr, &mut scratch);
                if !loss.is_finite() {
                    return Err(EmbedError::Numeric(format!(
                        "loss became {loss} in epoch {epoch}"
                    )));
                }
                loss_sum += f64::from(loss);
                samples += 1;
            }
            words_done += sentence.len() as u64;
        }
        report.epoch_losses.push(if samples == 0 {
            0.0
        } else {
            loss_sum / samples as f64
        });
        report.epoch_samples.push(samples);
    }
    if !params.all_finite() {
        return Err(EmbedError::Numeric("trained matrices contain non-finite values".into()));
    }
    let model = EmbeddingModel::new(vocab, params, normalization, Some(cfg.clone()))?;
    Ok((model, report))
}
