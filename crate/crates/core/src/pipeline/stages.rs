//! File-to-file stages. Each stage materializes its output so a run can be
//! resumed from any intermediate file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Pipeline, PipelineError};
use crate::corpus::{
    load_manifest, parse_corpus_spec, read_articles_jsonl, stream_articles, Article, CorpusError,
    FileReport,
};
use crate::embed::{read_store, write_store, EmbedError, EmbeddingStore};
use crate::index::{FlatIndex, IndexError, SearchHit};
use crate::jsonl::{read_jsonl, write_jsonl, JsonlError};
use crate::nermask::{AnnotatedArticle, MaskedArticle};

#[derive(Debug, thiserror::Error)]
pub enum StageFileError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, StageFileError>;

/// One row of a `hits.jsonl` file. Ranks start at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRow {
    pub query_id: String,
    pub rank: usize,
    pub id: String,
    pub score: f32,
}

pub fn hit_rows(query_ids: &[String], hits: &[Vec<SearchHit>]) -> Vec<HitRow> {
    query_ids
        .iter()
        .zip(hits)
        .flat_map(|(q, hs)| {
            hs.iter().enumerate().map(move |(r, h)| HitRow {
                query_id: q.clone(),
                rank: r + 1,
                id: h.id.clone(),
                score: h.score,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DownloadReport {
    pub output: PathBuf,
    pub articles: usize,
    pub files: Vec<FileReport>,
}

/// Copies the articles selected by a corpus-spec string into
/// `out_dir/corpus.jsonl`.
pub fn download(spec: &str, manifest: &Path, out_dir: &Path) -> Result<DownloadReport> {
    let spec = parse_corpus_spec(spec)?;
    let manifest = load_manifest(manifest)?;
    std::fs::create_dir_all(out_dir).map_err(|source| StageFileError::Io {
        path: out_dir.to_owned(),
        source,
    })?;
    let output = out_dir.join("corpus.jsonl");
    let mut stream = stream_articles(&manifest, &spec)?;
    let articles: Vec<Article> = stream.by_ref().collect::<std::result::Result<_, _>>()?;
    let n = write_jsonl(&output, &articles)?;
    Ok(DownloadReport {
        output,
        articles: n,
        files: stream.reports().to_vec(),
    })
}

pub fn ner(pipeline: &Pipeline, input: &Path, output: &Path) -> Result<usize> {
    let articles = read_articles_jsonl(input)?;
    let rows = pipeline.annotate_articles(&articles)?;
    Ok(write_jsonl(output, &rows)?)
}

pub fn mask(input: &Path, output: &Path) -> Result<usize> {
    let rows: Vec<AnnotatedArticle> = read_jsonl(input)?;
    let masked = rows
        .iter()
        .map(Pipeline::mask_annotated)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(write_jsonl(output, &masked)?)
}

pub fn embed(pipeline: &Pipeline, input: &Path, output: &Path) -> Result<usize> {
    let masked: Vec<MaskedArticle> = read_jsonl(input)?;
    let store = pipeline.embed_masked(&masked)?;
    write_store(&store, output)?;
    Ok(store.len())
}

pub fn mask_and_embed(pipeline: &Pipeline, input: &Path, output: &Path) -> Result<usize> {
    let articles = read_articles_jsonl(input)?;
    let store = pipeline.mask_and_embed(&articles)?;
    write_store(&store, output)?;
    Ok(store.len())
}

/// Opens store files (memory-mapped) and indexes them in the given order.
pub fn open_index(stores: &[PathBuf]) -> Result<FlatIndex> {
    let shards = stores
        .iter()
        .map(|p| EmbeddingStore::open_mapped(p).map(Arc::new))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(FlatIndex::build(shards)?)
}

pub fn search(stores: &[PathBuf], query_store: &Path, k: usize, output: &Path) -> Result<usize> {
    let index = open_index(stores)?;
    let queries = read_store(query_store)?;
    let hits = index.search_batch(&queries.rows().collect::<Vec<_>>(), k)?;
    Ok(write_jsonl(output, &hit_rows(queries.ids(), &hits))?)
}

pub fn search_nearest_story(
    pipeline: &Pipeline,
    queries: &Path,
    stores: &[PathBuf],
    k: usize,
    output: &Path,
) -> Result<usize> {
    let index = open_index(stores)?;
    let queries = read_articles_jsonl(queries)?;
    let hits = pipeline.search_nearest_story(&queries, &index, k)?;
    let ids: Vec<String> = queries.into_iter().map(|a| a.id).collect();
    Ok(write_jsonl(output, &hit_rows(&ids, &hits))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{toy, write_articles_jsonl};
    use crate::pipeline::PipelineConfig;

    #[test]
    fn staged_run_equals_fused_run() {
        let dir = tempfile::tempdir().unwrap();
        let p = |n: &str| dir.path().join(n);
        let corpus = toy::generate(12, 5);
        write_articles_jsonl(&p("corpus.jsonl"), &corpus).unwrap();
        let pipe = Pipeline::from_config(PipelineConfig::default()).unwrap();

        ner(&pipe, &p("corpus.jsonl"), &p("ner.jsonl")).unwrap();
        mask(&p("ner.jsonl"), &p("masked.jsonl")).unwrap();
        embed(&pipe, &p("masked.jsonl"), &p("staged.ndjv")).unwrap();
        mask_and_embed(&pipe, &p("corpus.jsonl"), &p("fused.ndjv")).unwrap();
        assert_eq!(
            std::fs::read(p("staged.ndjv")).unwrap(),
            std::fs::read(p("fused.ndjv")).unwrap()
        );

        let n = search(&[p("fused.ndjv")], &p("staged.ndjv"), 3, &p("hits.jsonl")).unwrap();
        assert_eq!(n, 36);
        let rows: Vec<HitRow> = read_jsonl(&p("hits.jsonl")).unwrap();
        for (q, a) in rows.chunks(3).zip(&corpus) {
            assert_eq!(q[0].query_id, a.id);
            assert_eq!(q[0].id, a.id);
            assert_eq!(q[0].rank, 1);
        }

        search_nearest_story(&pipe, &p("corpus.jsonl"), &[p("fused.ndjv")], 3, &p("hits2.jsonl"))
            .unwrap();
        let rows2: Vec<HitRow> = read_jsonl(&p("hits2.jsonl")).unwrap();
        assert_eq!(rows, rows2);
    }

    #[test]
    fn download_filters_by_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let a = toy::generate(6, 2);
        write_articles_jsonl(&dir.path().join("al1900.jsonl"), &a[..4]).unwrap();
        write_articles_jsonl(&dir.path().join("oh1900.jsonl"), &a[4..]).unwrap();
        std::fs::write(
            dir.path().join("manifest.json"),
            r#"{"schema_version":1,"dataset_name":"american stories","files":[
                {"path":"al1900.jsonl","state":"Alabama","year":1900},
                {"path":"oh1900.jsonl","state":"Ohio","year":1900}]}"#,
        )
        .unwrap();
        let out = dir.path().join("out");
        let rep = download(
            "american stories:1900:Alabama",
            &dir.path().join("manifest.json"),
            &out,
        )
        .unwrap();
        assert_eq!(rep.articles, 4);
        assert_eq!(read_articles_jsonl(&rep.output).unwrap(), a[..4]);
    }
}
