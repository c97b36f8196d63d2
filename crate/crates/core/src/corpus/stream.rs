use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::PathBuf;

use serde_json::Value;

use super::{validate_article, Article, CorpusError, CorpusSpec, DatasetManifest, ManifestFile, Result};

/// Per-file outcome of a streaming pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileReport {
    pub path: PathBuf,
    pub valid: usize,
    pub invalid: usize,
}

/// Streams the articles of every manifest file matching `spec`, in manifest
/// order then line order.
///
/// Invalid lines are skipped and counted in [`ArticleStream::reports`]. A file
/// with more than half of its non-blank lines invalid ends the stream with
/// [`CorpusError::CorruptFile`] once that file has been read to its end.
pub fn stream_articles(manifest: &DatasetManifest, spec: &CorpusSpec) -> Result<ArticleStream> {
    if !spec.matches_dataset(&manifest.dataset_name) {
        return Err(CorpusError::DatasetMismatch {
            spec: spec.dataset.clone(),
            manifest: manifest.dataset_name.clone(),
        });
    }
    let pending = manifest
        .files
        .iter()
        .filter(|f| spec.matches(&f.state, f.year))
        .map(|f| source_for(manifest, f))
        .collect();
    Ok(ArticleStream {
        pending,
        current: None,
        reports: Vec::new(),
        done: false,
    })
}

enum Source {
    Local(PathBuf),
    Remote(String),
}

impl Source {
    fn display_path(&self) -> PathBuf {
        match self {
            Source::Local(p) => p.clone(),
            Source::Remote(u) => PathBuf::from(u),
        }
    }

    fn open(&self) -> Result<Box<dyn BufRead>> {
        match self {
            Source::Local(p) => {
                let f = File::open(p).map_err(|source| CorpusError::Io {
                    path: p.clone(),
                    source,
                })?;
                Ok(Box::new(BufReader::new(f)))
            }
            Source::Remote(url) => {
                let resp = ureq::get(url).call().map_err(|e| CorpusError::Fetch {
                    path: url.clone(),
                    reason: e.to_string(),
                })?;
                Ok(Box::new(BufReader::new(resp.into_body().into_reader())))
            }
        }
    }
}

fn source_for(manifest: &DatasetManifest, f: &ManifestFile) -> Source {
    match manifest.local_path(f) {
        Some(p) => Source::Local(p),
        None => Source::Remote(f.path.clone()),
    }
}

struct OpenFile {
    path: PathBuf,
    lines: std::io::Lines<Box<dyn BufRead>>,
    valid: usize,
    invalid: usize,
}

pub struct ArticleStream {
    pending: VecDeque<Source>,
    current: Option<OpenFile>,
    reports: Vec<FileReport>,
    done: bool,
}

impl ArticleStream {
    /// Reports for every file read to completion so far.
    pub fn reports(&self) -> &[FileReport] {
        &self.reports
    }

    pub fn skipped(&self) -> usize {
        self.reports.iter().map(|r| r.invalid).sum()
    }

    fn fail(&mut self, err: CorpusError) -> Option<Result<Article>> {
        self.done = true;
        self.current = None;
        Some(Err(err))
    }
}

impl Iterator for ArticleStream {
    type Item = Result<Article>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.done {
                return None;
            }
            let Some(file) = self.current.as_mut() else {
                let Some(src) = self.pending.pop_front() else {
                    self.done = true;
                    return None;
                };
                match src.open() {
                    Ok(reader) => {
                        self.current = Some(OpenFile {
                            path: src.display_path(),
                            lines: reader.lines(),
                            valid: 0,
                            invalid: 0,
                        });
                        continue;
                    }
                    Err(e) => return self.fail(e),
                }
            };

            match file.lines.next() {
                Some(Ok(line)) => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let parsed = serde_json::from_str::<Value>(&line)
                        .ok()
                        .and_then(|v| validate_article(&v).ok());
                    match parsed {
                        Some(a) => {
                            file.valid += 1;
                            return Some(Ok(a));
                        }
                        None => file.invalid += 1,
                    }
                }
                Some(Err(source)) => {
                    let path = file.path.clone();
                    return self.fail(CorpusError::Io { path, source });
                }
                None => {
                    let file = self.current.take().expect("current file");
                    let total = file.valid + file.invalid;
                    let corrupt = file.invalid * 2 > total;
                    self.reports.push(FileReport {
                        path: file.path.clone(),
                        valid: file.valid,
                        invalid: file.invalid,
                    });
                    if corrupt {
                        return self.fail(CorpusError::CorruptFile {
                            path: file.path,
                            invalid: file.invalid,
                            total,
                        });
                    }
                }
            }
        }
    }
}
