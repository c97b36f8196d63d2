use serde::{Deserialize, Serialize};

use super::{l2_normalize, EmbedError, EmbeddingVector, DEFAULT_MODEL, STUB_DIM};
use crate::backend::{BackendError, JsonClient, RetryPolicy};

/// A text encoder. Raw outputs need not be normalized; [`embed_batch`] does it.
pub trait EmbedBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Output dimension, when known without a round trip.
    fn dim(&self) -> Option<usize>;

    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, BackendError>;
}

/// Embeds a batch, checks the reply shape and L2-normalizes every vector.
pub fn embed_batch(
    backend: &dyn EmbedBackend,
    texts: &[String],
) -> Result<Vec<EmbeddingVector>, EmbedError> {
    if let Some(index) = texts.iter().position(|t| t.trim().is_empty()) {
        return Err(EmbedError::EmptyText { index });
    }
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let raw = backend.embed_raw(texts)?;
    if raw.len() != texts.len() {
        return Err(BackendError::Protocol(format!(
            "{} returned {} vectors for {} texts",
            backend.name(),
            raw.len(),
            texts.len()
        ))
        .into());
    }
    let dim = backend.dim().unwrap_or(raw[0].len());
    if let Some(bad) = raw.iter().find(|v| v.len() != dim) {
        return Err(BackendError::Protocol(format!(
            "{} returned a {}-dim vector, expected {dim}",
            backend.name(),
            bad.len()
        ))
        .into());
    }
    raw.iter().map(|v| l2_normalize(v)).collect()
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Deterministic hashing embedder used in place of a neural bi-encoder.
///
/// Lowercased whitespace unigrams and bigrams (joined by one space) are
/// hashed with FNV-1a; the hash modulo `dim` picks a bucket and its top bit
/// picks the sign. Bucket counts are then L2-normalized.
#[derive(Debug, Clone, Copy)]
pub struct StubEmbedBackend {
    dim: usize,
}

impl Default for StubEmbedBackend {
    fn default() -> Self {
        Self { dim: STUB_DIM }
    }
}

impl StubEmbedBackend {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "embedding dim must be positive");
        Self { dim }
    }

    /// Unnormalized bucket counts for one text.
    pub fn raw_vector(&self, text: &str) -> Vec<f32> {
        let lower = text.to_lowercase();
        let tokens: Vec<&str> = lower.split_whitespace().collect();
        let mut v = vec![0.0f32; self.dim];
        let mut add = |feature: &str| {
            let h = fnv1a64(feature.as_bytes());
            let bucket = (h % self.dim as u64) as usize;
            v[bucket] += if h >> 63 == 1 { -1.0 } else { 1.0 };
        };
        for t in &tokens {
            add(t);
        }
        for pair in tokens.windows(2) {
            add(&format!("{} {}", pair[0], pair[1]));
        }
        v
    }
}

impl EmbedBackend for StubEmbedBackend {
    fn name(&self) -> &str {
        "stub"
    }

    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, BackendError> {
        Ok(texts.iter().map(|t| self.raw_vector(t)).collect())
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
    model: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f32>>,
}

/// Remote encoder speaking `{texts, model}` → `{dim, vectors}` JSON over HTTP.
#[derive(Debug, Clone)]
pub struct HttpEmbedBackend {
    client: JsonClient,
    model: String,
    dim: Option<usize>,
}

impl HttpEmbedBackend {
    pub fn new(url: impl Into<String>, policy: RetryPolicy) -> Self {
        Self {
            client: JsonClient::new(url, policy),
            model: DEFAULT_MODEL.to_owned(),
            dim: None,
        }
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = model.into();
        self
    }

    /// Pins the expected output dimension; replies of another size are
    /// protocol errors.
    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = Some(dim);
        self
    }
}

impl EmbedBackend for HttpEmbedBackend {
    fn name(&self) -> &str {
        self.client.url()
    }

    fn dim(&self) -> Option<usize> {
        self.dim
    }

    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, BackendError> {
        let resp: EmbedResponse = self.client.post(&EmbedRequest {
            texts,
            model: &self.model,
        })?;
        if let Some(v) = resp.vectors.iter().find(|v| v.len() != resp.dim) {
            return Err(BackendError::Protocol(format!(
                "reply declares dim {} but carries a {}-dim vector",
                resp.dim,
                v.len()
            )));
        }
        Ok(resp.vectors)
    }
}
