//! The inference pipeline: NER → mask → embed → exact search, as fused
//! operations over in-memory articles and as resumable file stages.

mod config;
pub mod stages;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::backend::BackendError;
use crate::corpus::Article;
use crate::embed::{
    embed_batch, EmbedBackend, EmbedError, EmbeddingStore, EmbeddingVector, HttpEmbedBackend,
    StubEmbedBackend, DEFAULT_MODEL_DIM,
};
use crate::index::{FlatIndex, IndexError, SearchHit};
use crate::nermask::{
    annotate, decode_bio, mask_spans, AnnotatedArticle, HttpNerBackend, MaskedArticle,
    NerBackend, NerError, StubNerBackend, TokenAnnotation,
};
use crate::backend::BackendSpec;

pub use config::{PipelineConfig, DEFAULT_EMBED_BATCH, DEFAULT_NER_BATCH, DEFAULT_NER_MODEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ner,
    Mask,
    Embed,
    Search,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Ner => "ner",
            Stage::Mask => "mask",
            Stage::Embed => "embed",
            Stage::Search => "search",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Ner(#[from] NerError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{stage} stage failed at article {article_id:?}: {source}")]
    Stage {
        stage: Stage,
        article_id: String,
        #[source]
        source: StageError,
    },
    #[error("invalid pipeline config: {0}")]
    Config(String),
}

impl PipelineError {
    fn at(stage: Stage, article_id: &str, source: impl Into<StageError>) -> Self {
        PipelineError::Stage {
            stage,
            article_id: article_id.to_owned(),
            source: source.into(),
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Stage { stage, .. } => Some(*stage),
            PipelineError::Config(_) => None,
        }
    }

    /// True when a backend could not be reached (as opposed to misbehaving).
    pub fn is_unavailable(&self) -> bool {
        matches!(
            self,
            PipelineError::Stage {
                source: StageError::Backend(BackendError::Unavailable { .. })
                    | StageError::Embed(EmbedError::Backend(BackendError::Unavailable { .. })),
                ..
            }
        )
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

/// Collects per-batch results in input order, reporting the first failure.
fn in_order<T>(parts: Vec<Result<Vec<T>>>) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Backends plus batching configuration.
pub struct Pipeline {
    config: PipelineConfig,
    ner: Box<dyn NerBackend>,
    embedder: Box<dyn EmbedBackend>,
}

impl fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pipeline")
            .field("config", &self.config)
            .field("ner", &self.ner.name())
            .field("embedder", &self.embedder.name())
            .finish()
    }
}

impl Pipeline {
    pub fn from_config(config: PipelineConfig) -> Result<Self> {
        config.validate().map_err(PipelineError::Config)?;
        let ner: Box<dyn NerBackend> = match &config.ner_backend {
            BackendSpec::Stub => Box::new(StubNerBackend),
            BackendSpec::Url(u) => Box::new(HttpNerBackend::new(u.clone(), config.retry)),
        };
        let embedder: Box<dyn EmbedBackend> = match &config.embed_backend {
            BackendSpec::Stub => Box::new(StubEmbedBackend::new(config.stub_dim())),
            BackendSpec::Url(u) => {
                let b = HttpEmbedBackend::new(u.clone(), config.retry)
                    .with_model(config.model_name.clone());
                Box::new(match config.embed_dim {
                    Some(d) => b.with_dim(d),
                    None => b,
                })
            }
        };
        Ok(Self {
            config,
            ner,
            embedder,
        })
    }

    pub fn with_backends(
        config: PipelineConfig,
        ner: Box<dyn NerBackend>,
        embedder: Box<dyn EmbedBackend>,
    ) -> Result<Self> {
        config.validate().map_err(PipelineError::Config)?;
        Ok(Self {
            config,
            ner,
            embedder,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn ner_backend(&self) -> &dyn NerBackend {
        self.ner.as_ref()
    }

    pub fn embed_backend(&self) -> &dyn EmbedBackend {
        self.embedder.as_ref()
    }

    /// Store dimension for an empty corpus, when no vector has been seen.
    fn fallback_dim(&self) -> usize {
        self.embedder
            .dim()
            .or(self.config.embed_dim)
            .unwrap_or(DEFAULT_MODEL_DIM)
    }

    /// Tags every text, one backend call per NER batch.
    pub fn annotate_texts(&self, ids: &[&str], texts: &[String]) -> Result<Vec<Vec<TokenAnnotation>>> {
        debug_assert_eq!(ids.len(), texts.len());
        let bs = self.config.ner_batch_size;
        let parts: Vec<_> = texts
            .par_chunks(bs)
            .zip(ids.par_chunks(bs))
            .map(|(chunk, chunk_ids)| {
                annotate(self.ner.as_ref(), chunk)
                    .map_err(|e| PipelineError::at(Stage::Ner, chunk_ids[0], e))
            })
            .collect();
        in_order(parts)
    }

    pub fn annotate_articles(&self, articles: &[Article]) -> Result<Vec<AnnotatedArticle>> {
        let ids: Vec<&str> = articles.iter().map(|a| a.id.as_str()).collect();
        let texts: Vec<String> = articles.iter().map(|a| a.text.clone()).collect();
        let anns = self.annotate_texts(&ids, &texts)?;
        Ok(articles
            .iter()
            .cloned()
            .zip(anns)
            .map(|(article, annotations)| AnnotatedArticle {
                article,
                annotations,
            })
            .collect())
    }

    /// Decodes and masks one tagged article.
    pub fn mask_annotated(row: &AnnotatedArticle) -> Result<MaskedArticle> {
        let id = &row.article.id;
        let spans = decode_bio(&row.annotations).map_err(|e| PipelineError::at(Stage::Mask, id, e))?;
        let masked = mask_spans(&row.article.text, &spans)
            .map_err(|e| PipelineError::at(Stage::Mask, id, e))?;
        Ok(masked.into_article(id.clone()))
    }

    /// NER, decode and mask for a batch of articles.
    pub fn mask_articles(&self, articles: &[Article]) -> Result<Vec<MaskedArticle>> {
        self.annotate_articles(articles)?
            .iter()
            .map(Self::mask_annotated)
            .collect()
    }

    fn embed_input(&self, masked_text: &str) -> String {
        match self.config.max_chars {
            Some(n) => masked_text.chars().take(n).collect(),
            None => masked_text.to_owned(),
        }
    }

    /// Embeds texts in embed-sized batches, in order.
    pub fn embed_texts(&self, ids: &[&str], texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let bs = self.config.embed_batch_size;
        let inputs: Vec<String> = texts.iter().map(|t| self.embed_input(t)).collect();
        let parts: Vec<_> = inputs
            .par_chunks(bs)
            .zip(ids.par_chunks(bs))
            .map(|(chunk, chunk_ids)| {
                embed_batch(self.embedder.as_ref(), chunk).map_err(|e| {
                    let id = match &e {
                        EmbedError::EmptyText { index } => chunk_ids[*index],
                        _ => chunk_ids[0],
                    };
                    PipelineError::at(Stage::Embed, id, e)
                })
            })
            .collect();
        let vectors = in_order(parts)?;
        if let Some(first) = vectors.first() {
            let dim = first.dim();
            if let Some(i) = vectors.iter().position(|v| v.dim() != dim) {
                return Err(PipelineError::at(
                    Stage::Embed,
                    ids[i],
                    EmbedError::DimMismatch {
                        expected: dim,
                        found: vectors[i].dim(),
                    },
                ));
            }
        }
        Ok(vectors)
    }

    /// Builds a store from masked rows; row `i` is `masked[i]`.
    pub fn embed_masked(&self, masked: &[MaskedArticle]) -> Result<EmbeddingStore> {
        let ids: Vec<&str> = masked.iter().map(|m| m.id.as_str()).collect();
        let texts: Vec<String> = masked.iter().map(|m| m.masked_text.clone()).collect();
        let vectors = self.embed_texts(&ids, &texts)?;
        let dim = vectors.first().map_or_else(|| self.fallback_dim(), EmbeddingVector::dim);
        let first_id = ids.first().copied().unwrap_or_default();
        EmbeddingStore::from_vectors(dim, ids.iter().map(|s| s.to_string()).collect(), vectors)
            .map_err(|e| PipelineError::at(Stage::Embed, first_id, e))
    }

    /// NER, masking and embedding in one call.
    pub fn mask_and_embed(&self, articles: &[Article]) -> Result<EmbeddingStore> {
        let masked = self.mask_articles(articles)?;
        self.embed_masked(&masked)
    }

    /// Masks (optionally) and embeds one free-text query.
    pub fn prepare_query(&self, text: &str, mask: bool) -> Result<(String, EmbeddingVector)> {
        const QUERY_ID: &str = "<query>";
        let shown = if mask {
            let anns = self.annotate_texts(&[QUERY_ID], &[text.to_owned()])?;
            let row = AnnotatedArticle {
                article: Article {
                    id: QUERY_ID.into(),
                    source: String::new(),
                    date: String::new(),
                    text: text.to_owned(),
                    headline: None,
                },
                annotations: anns.into_iter().next().unwrap_or_default(),
            };
            Self::mask_annotated(&row)?.masked_text
        } else {
            text.to_owned()
        };
        let v = self
            .embed_texts(&[QUERY_ID], std::slice::from_ref(&shown))?
            .pop()
            .expect("one vector per text");
        Ok((shown, v))
    }

    /// Masks and embeds the queries, then searches the corpus index.
    pub fn search_nearest_story(
        &self,
        queries: &[Article],
        corpus: &FlatIndex,
        k: usize,
    ) -> Result<Vec<Vec<SearchHit>>> {
        let query_store = self.mask_and_embed(queries)?;
        let first = queries.first().map_or("", |a| a.id.as_str());
        corpus
            .search_batch(&query_store.rows().collect::<Vec<_>>(), k)
            .map_err(|e| PipelineError::at(Stage::Search, first, e))
    }

    /// [`Pipeline::search_nearest_story`] against a single corpus store.
    pub fn search_nearest_story_in_store(
        &self,
        queries: &[Article],
        corpus_store: Arc<EmbeddingStore>,
        k: usize,
    ) -> Result<Vec<Vec<SearchHit>>> {
        let index = FlatIndex::build(vec![corpus_store])
            .map_err(|e| PipelineError::at(Stage::Search, "", e))?;
        self.search_nearest_story(queries, &index, k)
    }
}

/// Per-query score lists and id lists, aligned to the query rows.
pub type NeighbourLists = (Vec<Vec<f32>>, Vec<Vec<String>>);

/// Scores and ids of the `k` nearest corpus rows for every query row.
pub fn find_nearest_neighbours(
    query_store: &EmbeddingStore,
    corpus_store: Arc<EmbeddingStore>,
    k: usize,
) -> Result<NeighbourLists, IndexError> {
    let index = FlatIndex::build(vec![corpus_store])?;
    let hits = index.search_batch(&query_store.rows().collect::<Vec<_>>(), k)?;
    Ok(hits
        .into_iter()
        .map(|row| row.into_iter().map(|h| (h.score, h.id)).unzip())
        .unzip())
}
