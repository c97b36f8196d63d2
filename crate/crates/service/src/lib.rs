//! Read-only HTTP query service: masked embed-and-search over a loaded
//! index, plus article lookup.
//!
//! The router answers `/health` with 503 until [`AppState::install`] is
//! called, so a listener can come up before the stores finish loading.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ndv_core::corpus::{read_articles_jsonl, Article, CorpusError};
use ndv_core::index::{FlatIndex, IndexError, SearchHit};
use ndv_core::pipeline::stages::{open_index, StageFileError};
use ndv_core::pipeline::{Pipeline, PipelineConfig, PipelineError};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::CorsLayer;

pub const DEFAULT_K: i64 = 5;
pub const MAX_K: i64 = 50;
pub const SNIPPET_CHARS: usize = 300;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Stage(#[from] StageFileError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("indexed article {0:?} has no corpus row")]
    MissingArticle(String),
}

/// Everything a request needs. Immutable once built.
pub struct Loaded {
    pipeline: Pipeline,
    index: FlatIndex,
    articles: HashMap<String, Article>,
}

impl Loaded {
    /// Fails if any indexed id lacks a corpus row.
    pub fn new(pipeline: Pipeline, index: FlatIndex, corpus: Vec<Article>) -> Result<Self, LoadError> {
        let articles: HashMap<String, Article> =
            corpus.into_iter().map(|a| (a.id.clone(), a)).collect();
        for ord in 0..index.total() {
            let id = index.id_of(ord).expect("ordinal in range");
            if !articles.contains_key(id) {
                return Err(LoadError::MissingArticle(id.to_owned()));
            }
        }
        Ok(Self { pipeline, index, articles })
    }

    /// Builds the pipeline, maps the stores and reads the corpus file.
    pub fn open(config: PipelineConfig, stores: &[PathBuf], corpus: &Path) -> Result<Self, LoadError> {
        let pipeline = Pipeline::from_config(config)?;
        let index = open_index(stores)?;
        let corpus = read_articles_jsonl(corpus)?;
        Self::new(pipeline, index, corpus)
    }

    pub fn index(&self) -> &FlatIndex {
        &self.index
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }
}

#[derive(Clone, Default)]
pub struct AppState {
    slot: Arc<OnceLock<Arc<Loaded>>>,
}

impl AppState {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn ready(loaded: Loaded) -> Self {
        let s = Self::default();
        s.install(loaded);
        s
    }

    /// Publishes the loaded data. Later calls are ignored.
    pub fn install(&self, loaded: Loaded) {
        let _ = self.slot.set(Arc::new(loaded));
    }

    fn get(&self) -> Option<Arc<Loaded>> {
        self.slot.get().cloned()
    }
}

#[derive(Debug, Deserialize)]
pub struct SearchRequest {
    pub text: String,
    pub k: Option<i64>,
    pub mask: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitView {
    pub id: String,
    pub score: f32,
    pub headline: Option<String>,
    pub date: String,
    pub source: String,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub hits: Vec<HitView>,
    pub masked_query: String,
    pub timing_ms: u64,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, msg: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": msg.into() }),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let status = if e.is_unavailable() {
            StatusCode::SERVICE_UNAVAILABLE
        } else {
            StatusCode::BAD_GATEWAY
        };
        Self {
            status,
            body: json!({
                "error": e.to_string(),
                "stage": e.stage().map(|s| s.to_string()),
            }),
        }
    }
}

impl From<IndexError> for ApiError {
    fn from(e: IndexError) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

fn not_ready() -> ApiError {
    ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "index not loaded")
}

pub fn snippet(text: &str) -> String {
    text.chars().take(SNIPPET_CHARS).collect()
}

/// The search itself, shared by the handler and by tests.
pub fn run_search(loaded: &Loaded, text: &str, k: usize, mask: bool) -> Result<(String, Vec<SearchHit>), ApiError> {
    let (shown, vector) = loaded.pipeline.prepare_query(text, mask)?;
    let hits = loaded.index.search(vector.as_slice(), k)?;
    Ok((shown, hits))
}

async fn search(
    State(state): State<AppState>,
    body: Result<Json<SearchRequest>, JsonRejection>,
) -> Result<Json<SearchResponse>, ApiError> {
    let started = Instant::now();
    let Json(req) = body.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.body_text()))?;
    if req.text.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "text must not be empty"));
    }
    let k = req.k.unwrap_or(DEFAULT_K);
    if !(1..=MAX_K).contains(&k) {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            format!("k must be between 1 and {MAX_K}, got {k}"),
        ));
    }
    let loaded = state.get().ok_or_else(not_ready)?;
    let mask = req.mask.unwrap_or(true);

    let worker = loaded.clone();
    let (masked_query, hits) =
        tokio::task::spawn_blocking(move || run_search(&worker, &req.text, k as usize, mask))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;

    let hits = hits
        .into_iter()
        .map(|h| {
            let a = &loaded.articles[&h.id];
            HitView {
                score: h.score,
                headline: a.headline.clone(),
                date: a.date.clone(),
                source: a.source.clone(),
                snippet: snippet(&a.text),
                id: h.id,
            }
        })
        .collect();
    Ok(Json(SearchResponse {
        hits,
        masked_query,
        timing_ms: started.elapsed().as_millis() as u64,
    }))
}

async fn article(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<Article>, ApiError> {
    let loaded = state.get().ok_or_else(not_ready)?;
    loaded
        .articles
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown article {id:?}")))
}

async fn health(State(state): State<AppState>) -> Response {
    match state.get() {
        Some(l) => Json(json!({
            "status": "ok",
            "index_total": l.index.total(),
            "dim": l.index.dim(),
        }))
        .into_response(),
        None => (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(json!({ "status": "loading" })),
        )
            .into_response(),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/search", post(search))
        .route("/article/{id}", get(article))
        .route("/health", get(health))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves the router on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}
