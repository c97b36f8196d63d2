use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CorpusError, Result};

pub const MANIFEST_SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFile {
    /// Local path (relative to the manifest's directory, or absolute) or an
    /// `http(s)://` mirror URL.
    pub path: String,
    pub state: String,
    pub year: i32,
}

impl ManifestFile {
    pub fn is_remote(&self) -> bool {
        self.path.starts_with("http://") || self.path.starts_with("https://")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: i64,
    pub dataset_name: String,
    pub files: Vec<ManifestFile>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    /// Parses and validates a manifest document.
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let raw: Value = serde_json::from_str(text)
            .map_err(|e| CorpusError::Manifest(format!("not valid JSON: {e}")))?;
        let version = raw
            .get("schema_version")
            .ok_or_else(|| CorpusError::Manifest("missing \"schema_version\"".into()))?
            .as_i64()
            .ok_or_else(|| CorpusError::Manifest("\"schema_version\" is not an integer".into()))?;
        if version != MANIFEST_SCHEMA_VERSION {
            return Err(CorpusError::ManifestVersion {
                found: version,
                expected: MANIFEST_SCHEMA_VERSION,
            });
        }
        let mut manifest: DatasetManifest =
            serde_json::from_value(raw).map_err(|e| CorpusError::Manifest(e.to_string()))?;
        manifest.base_dir = base_dir.into();
        manifest.validate()?;
        Ok(manifest)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for f in &self.files {
            if !seen.insert(f.path.as_str()) {
                return Err(CorpusError::Manifest(format!(
                    "path {:?} listed more than once",
                    f.path
                )));
            }
            if !(1500..=2100).contains(&f.year) {
                return Err(CorpusError::Manifest(format!(
                    "{:?}: year {} outside 1500..=2100",
                    f.path, f.year
                )));
            }
        }
        Ok(())
    }

    /// Local filesystem location of a manifest entry; `None` for remote ones.
    pub fn local_path(&self, file: &ManifestFile) -> Option<PathBuf> {
        (!file.is_remote()).then(|| self.base_dir.join(&file.path))
    }
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    DatasetManifest::from_json(&text, base)
}
