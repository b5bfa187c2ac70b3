use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{embed_tokens, DocVector, EmbedError, EmbeddingModel};
use crate::textnorm::preprocess_document;

/// Turns free text into a unit-norm vector of fixed dimension.
///
/// Scores from different providers are not comparable, so an index records
/// the name of the provider that built it.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<DocVector, EmbedError>;
}

/// Embeds with a local CBOW model: preprocess with the model's
/// normalization, mean-pool, normalize.
#[derive(Debug, Clone)]
pub struct LocalProvider {
    model: Arc<EmbeddingModel>,
    name: String,
}

impl LocalProvider {
    pub fn new(model: impl Into<Arc<EmbeddingModel>>) -> Self {
        let model = model.into();
        let name = format!("cbow-{}d-{}", model.dim(), model.fingerprint());
        LocalProvider { model, name }
    }

    pub fn model(&self) -> &EmbeddingModel {
        &self.model
    }
}

impl EmbeddingProvider for LocalProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn embed(&self, text: &str) -> Result<DocVector, EmbedError> {
        embed_tokens(&self.model, &preprocess_document(text, &self.model.normalization()))
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<Option<f64>>,
    dim: usize,
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
}

/// Client for an external embedding server speaking
/// `POST /embed {"text"} -> {"vector", "dim"}`.
#[derive(Debug, Clone)]
pub struct RemoteProvider {
    name: String,
    url: String,
    dim: usize,
    agent: ureq::Agent,
}

impl RemoteProvider {
    /// `endpoint` is the server's base URL; `/embed` is appended.
    pub fn new(name: impl Into<String>, endpoint: &str, dim: usize) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        RemoteProvider {
            name: name.into(),
            url: embed_url(endpoint),
            dim,
            agent,
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

fn embed_url(endpoint: &str) -> String {
    let base = endpoint.trim_end_matches('/');
    if base.ends_with("/embed") {
        base.to_string()
    } else {
        format!("{base}/embed")
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<DocVector, EmbedError> {
        let provider_err = |m: String| EmbedError::Provider(format!("{}: {m}", self.url));
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(EmbedRequest { text })
            .map_err(|e| provider_err(e.to_string()))?;
        let status = resp.status();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| provider_err(e.to_string()))?;
        if !status.is_success() {
            let detail = serde_json::from_str::<ErrorBody>(&body)
                .map(|b| b.error)
                .unwrap_or(body);
            return Err(provider_err(format!("status {}: {detail}", status.as_u16())));
        }
        let parsed: EmbedResponse =
            serde_json::from_str(&body).map_err(|e| provider_err(format!("bad response: {e}")))?;
        if parsed.dim != self.dim || parsed.vector.len() != self.dim {
            return Err(provider_err(format!(
                "expected dimension {}, server sent dim={} with {} values",
                self.dim,
                parsed.dim,
                parsed.vector.len()
            )));
        }
        let raw: Vec<f64> = parsed
            .vector
            .into_iter()
            .map(|v| v.filter(|x| x.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| provider_err("vector contains non-finite values".into()))?;
        DocVector::normalized(&raw).ok_or_else(|| provider_err("vector has zero norm".into()))
    }
}

/// One-off call to an embedding server declared to produce `dim`-sized
/// vectors. The response is L2-normalized locally.
pub fn remote_embed(endpoint: &str, text: &str, dim: usize) -> Result<DocVector, EmbedError> {
    RemoteProvider::new("remote", endpoint, dim).embed(text)
}
