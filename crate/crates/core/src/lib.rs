//! Retrieval of historical newspaper articles by story similarity.
//!
//! Articles are entity-masked, embedded into unit vectors, stored in a flat
//! binary store and searched with exact inner-product KNN.

pub mod backend;
pub mod corpus;
pub mod embed;
pub mod evalkit;
pub mod index;
pub mod jsonl;
pub mod metrics;
pub mod nermask;
pub mod pipeline;

pub use backend::{BackendError, BackendSpec, RetryPolicy};
pub use corpus::{Article, CorpusError, CorpusSpec};
pub use embed::{EmbedError, EmbeddingStore, EmbeddingVector};
pub use index::{FlatIndex, IndexError, SearchHit};
pub use metrics::Prf;
pub use nermask::{EntityClass, EntitySpan, MaskedArticle, NerError, Tag, MASK_TOKEN};
pub use pipeline::{find_nearest_neighbours, Pipeline, PipelineConfig, PipelineError, Stage};
