use std::path::Path;

use sha2::{Digest, Sha256};

use super::{CbowParams, DocVector, EmbedError, TrainingConfig, Vocabulary};
use crate::textnorm::{NormalizationConfig, TokenSequence};
use crate::wire::{self, FormatError, Reader};

/// File magic: format family `QSW2V` followed by version `1`.
pub const MODEL_MAGIC: &[u8; 6] = b"QSW2V1";

/// A trained CBOW model together with the normalization its corpus went
/// through.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    vocab: Vocabulary,
    params: CbowParams<f32>,
    normalization: NormalizationConfig,
    /// Present for freshly trained models; model files do not carry it.
    training: Option<TrainingConfig>,
}

impl EmbeddingModel {
    pub fn new(
        vocab: Vocabulary,
        params: CbowParams<f32>,
        normalization: NormalizationConfig,
        training: Option<TrainingConfig>,
    ) -> Result<Self, EmbedError> {
        if vocab.len() != params.vocab_size() {
            return Err(EmbedError::Domain(format!(
                "vocabulary has {} tokens but matrices have {} rows",
                vocab.len(),
                params.vocab_size()
            )));
        }
        if !params.all_finite() {
            return Err(EmbedError::Numeric("model matrices contain non-finite values".into()));
        }
        Ok(EmbeddingModel {
            vocab,
            params,
            normalization,
            training,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn params(&self) -> &CbowParams<f32> {
        &self.params
    }

    pub fn normalization(&self) -> NormalizationConfig {
        self.normalization
    }

    pub fn training(&self) -> Option<&TrainingConfig> {
        self.training.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// Input-matrix row of a token, if it is in the vocabulary.
    pub fn word_vector(&self, token: &str) -> Option<&[f32]> {
        self.vocab.id(token).map(|id| self.params.input_row(id))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let v = self.vocab.len();
        let dim = self.params.dim();
        let mut out = Vec::with_capacity(32 + v * (16 + 8 * dim));
        out.extend_from_slice(MODEL_MAGIC);
        wire::put_u32(&mut out, v as u32);
        wire::put_u32(&mut out, dim as u32);
        out.extend_from_slice(&self.normalization.to_bytes());
        for (token, &count) in self.vocab.tokens().iter().zip(self.vocab.counts()) {
            wire::put_str(&mut out, token);
            wire::put_u64(&mut out, count);
        }
        wire::put_f32s(&mut out, self.params.input());
        wire::put_f32s(&mut out, self.params.output());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EmbedError> {
        let mut r = Reader::new(bytes);
        wire::check_magic(&mut r, &MODEL_MAGIC[..5], &MODEL_MAGIC[5..])?;
        let v = r.u32("vocabulary size")? as usize;
        let dim = r.u32("dimension")? as usize;
        if v == 0 || dim == 0 {
            return Err(FormatError::Invalid(format!("empty shape {v}x{dim}")).into());
        }
        let flags: [u8; 6] = r.take(6, "normalization flags")?.try_into().expect("6 bytes");
        let normalization = NormalizationConfig::from_bytes(flags)
            .ok_or_else(|| FormatError::Invalid(format!("normalization flags {flags:?}")))?;

        // every vocabulary record takes at least 12 bytes
        let mut entries = Vec::with_capacity(v.min(r.remaining() / 12));
        for _ in 0..v {
            let token = r.string("vocabulary token")?;
            let count = r.u64("token count")?;
            entries.push((token, count));
        }
        let n = v
            .checked_mul(dim)
            .ok_or_else(|| FormatError::Invalid(format!("shape {v}x{dim} overflows")))?;
        let mut w_in = Vec::new();
        r.f32s(n, &mut w_in, "input matrix")?;
        let mut w_out = Vec::new();
        r.f32s(n, &mut w_out, "output matrix")?;
        r.finish()?;

        let min_count = entries.iter().map(|e| e.1).min().unwrap_or(0);
        let vocab = Vocabulary::from_counts(entries, min_count)
            .map_err(|e| FormatError::Invalid(e.to_string()))?;
        let params = CbowParams::from_parts(v, dim, w_in, w_out)?;
        if !params.all_finite() {
            return Err(FormatError::Invalid("non-finite matrix values".into()).into());
        }
        EmbeddingModel::new(vocab, params, normalization, None)
    }

    /// Short content hash identifying this model's weights and vocabulary.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_bytes());
        digest[..6].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Mean of the input rows of in-vocabulary tokens, L2-normalized.
/// Out-of-vocabulary tokens are skipped.
pub fn embed_tokens(model: &EmbeddingModel, tokens: &TokenSequence) -> Result<DocVector, EmbedError> {
    let mut sum = vec![0.0f64; model.dim()];
    let mut hits = 0usize;
    for row in tokens.iter().filter_map(|t| model.word_vector(t)) {
        for (acc, &x) in sum.iter_mut().zip(row) {
            *acc += f64::from(x);
        }
        hits += 1;
    }
    if hits == 0 {
        return Err(EmbedError::EmptyEmbedding);
    }
    let n = hits as f64;
    sum.iter_mut().for_each(|x| *x /= n);
    DocVector::normalized(&sum).ok_or(EmbedError::EmptyEmbedding)
}

pub fn persist_model(model: &EmbeddingModel, path: impl AsRef<Path>) -> Result<(), EmbedError> {
    let path = path.as_ref();
    std::fs::write(path, model.to_bytes()).map_err(|source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn restore_model(path: impl AsRef<Path>) -> Result<EmbeddingModel, EmbedError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    EmbeddingModel::from_bytes(&bytes)
}
