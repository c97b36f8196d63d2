//! Newspaper corpus ingestion: corpus-spec strings, dataset manifests,
//! article validation and filtered streaming over JSONL files.

mod article;
mod manifest;
mod spec;
mod stream;
pub mod toy;

use std::path::PathBuf;

pub use article::{read_articles_jsonl, validate_article, write_articles_jsonl, Article};
pub use manifest::{load_manifest, DatasetManifest, ManifestFile, MANIFEST_SCHEMA_VERSION};
pub use spec::{parse_corpus_spec, CorpusSpec};
pub use stream::{stream_articles, ArticleStream, FileReport};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("invalid corpus spec {spec:?}: {reason}")]
    SpecParse { spec: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: fetch failed: {reason}")]
    Fetch { path: String, reason: String },
    #[error("manifest schema_version {found} is not supported (expected {expected})")]
    ManifestVersion { found: i64, expected: i64 },
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("corpus spec names dataset {spec:?} but manifest describes {manifest:?}")]
    DatasetMismatch { spec: String, manifest: String },
    #[error("article record is not a JSON object")]
    NotAnObject,
    #[error("article record is missing field {0:?}")]
    MissingField(&'static str),
    #[error("article field {0:?} has the wrong type")]
    WrongType(&'static str),
    #[error("article id is empty")]
    EmptyId,
    #[error("article date {0:?} is not a valid ISO-8601 calendar date")]
    BadDate(String),
    #[error("article text is empty")]
    EmptyText,
    #[error("{path}: {invalid} of {total} lines invalid, file looks corrupt")]
    CorruptFile {
        path: PathBuf,
        invalid: usize,
        total: usize,
    },
    #[error("line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: Box<CorpusError>,
    },
    #[error("duplicate article id {0:?}")]
    DuplicateId(String),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;
