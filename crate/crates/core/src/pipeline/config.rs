use serde::{Deserialize, Serialize};

use crate::backend::{BackendSpec, RetryPolicy};
use crate::embed::{DEFAULT_MODEL, STUB_DIM};

pub const DEFAULT_NER_MODEL: &str = "historical_newspaper_ner";
pub const DEFAULT_NER_BATCH: usize = 64;
pub const DEFAULT_EMBED_BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub ner_backend: BackendSpec,
    pub embed_backend: BackendSpec,
    /// Model requested from a remote embedding backend.
    pub model_name: String,
    pub ner_model_name: String,
    pub k: usize,
    pub ner_batch_size: usize,
    pub embed_batch_size: usize,
    /// Embedding dimension: the stub's output size, or the size a remote
    /// backend is required to return.
    pub embed_dim: Option<usize>,
    /// Truncate masked texts to this many chars before embedding.
    pub max_chars: Option<usize>,
    pub retry: RetryPolicy,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            ner_backend: BackendSpec::Stub,
            embed_backend: BackendSpec::Stub,
            model_name: DEFAULT_MODEL.to_owned(),
            ner_model_name: DEFAULT_NER_MODEL.to_owned(),
            k: 5,
            ner_batch_size: DEFAULT_NER_BATCH,
            embed_batch_size: DEFAULT_EMBED_BATCH,
            embed_dim: None,
            max_chars: None,
            retry: RetryPolicy::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.k < 1 {
            return Err("k must be at least 1".into());
        }
        if self.ner_batch_size < 1 || self.embed_batch_size < 1 {
            return Err("batch sizes must be at least 1".into());
        }
        if self.embed_dim == Some(0) {
            return Err("embed_dim must be at least 1".into());
        }
        if self.max_chars == Some(0) {
            return Err("max_chars must be at least 1".into());
        }
        Ok(())
    }

    pub(crate) fn stub_dim(&self) -> usize {
        self.embed_dim.unwrap_or(STUB_DIM)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_partial_json() {
        let c: PipelineConfig =
            serde_json::from_str(r#"{"k": 3, "embed_backend": "http://localhost:1/embed"}"#).unwrap();
        assert_eq!(c.k, 3);
        assert_eq!(c.ner_backend, BackendSpec::Stub);
        assert_eq!(c.embed_backend, BackendSpec::Url("http://localhost:1/embed".into()));
        assert_eq!(c.model_name, "same-story");
        assert_eq!(c.ner_model_name, "historical_newspaper_ner");
        assert_eq!((c.ner_batch_size, c.embed_batch_size), (64, 256));
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"kk": 3}"#).is_err());
    }

    #[test]
    fn validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        for bad in [
            PipelineConfig { k: 0, ..Default::default() },
            PipelineConfig { ner_batch_size: 0, ..Default::default() },
            PipelineConfig { embed_batch_size: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
