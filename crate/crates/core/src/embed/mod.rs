//! Dense vectors: L2 normalization, embedding backends and the on-disk
//! vector store.

mod backend;
mod normalize;
mod store;

use std::path::PathBuf;

pub use backend::{embed_batch, fnv1a64, EmbedBackend, HttpEmbedBackend, StubEmbedBackend};
pub use normalize::{cosine, inner_product, l2_normalize, EmbeddingVector, NORM_TOLERANCE};
pub use store::{
    read_store, write_store, EmbeddingStore, STORE_HEADER_LEN, STORE_MAGIC, STORE_VERSION,
};

use crate::backend::BackendError;

/// Embedding dimension of the stub backend.
pub const STUB_DIM: usize = 256;
/// Conventional dimension of the production bi-encoder family.
pub const DEFAULT_MODEL_DIM: usize = 768;
/// Model name sent to remote embedding backends by default.
pub const DEFAULT_MODEL: &str = "same-story";

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot normalize an all-zero vector")]
    ZeroVector,
    #[error("vector has a non-finite component")]
    NonFinite,
    #[error("vector has no components")]
    EmptyVector,
    #[error("text {index} in batch is empty")]
    EmptyText { index: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("store invariant violated: {0}")]
    Invariant(String),
    #[error("bad store file: {0}")]
    Format(String),
    #[error("corrupt store: {0}")]
    CorruptStore(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
