//! Binary vector store.
//!
//! Layout, little-endian:
//!
//! ```text
//! offset 0   magic   b"NDJV"
//!        4   u32     version (1)
//!        8   u32     dim
//!        12  u64     count
//!        20  f32     count × dim, row-major
//!        ..  ids     count × (u32 byte length, UTF-8 bytes)
//! ```
//!
//! The matrix sits at a fixed 4-aligned offset so a mapped file can be
//! scored in place.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use memmap2::Mmap;

use super::normalize::norm_f64;
use super::{EmbedError, EmbeddingVector, NORM_TOLERANCE};

pub const STORE_MAGIC: [u8; 4] = *b"NDJV";
pub const STORE_VERSION: u32 = 1;
pub const STORE_HEADER_LEN: usize = 20;

enum Matrix {
    Owned(Vec<f32>),
    Mapped { map: Mmap, len: usize },
}

impl Matrix {
    fn as_slice(&self) -> &[f32] {
        match self {
            Matrix::Owned(v) => v,
            Matrix::Mapped { map, len } => {
                bytemuck::cast_slice(&map[STORE_HEADER_LEN..STORE_HEADER_LEN + len * 4])
            }
        }
    }
}

/// An immutable `count × dim` matrix of unit-norm rows with one id per row.
pub struct EmbeddingStore {
    dim: usize,
    ids: Vec<String>,
    matrix: Matrix,
}

impl fmt::Debug for EmbeddingStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddingStore")
            .field("dim", &self.dim)
            .field("count", &self.len())
            .field("mapped", &matches!(self.matrix, Matrix::Mapped { .. }))
            .finish()
    }
}

/// Equality is bitwise on the matrix.
impl PartialEq for EmbeddingStore {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.ids == other.ids
            && self
                .as_slice()
                .iter()
                .zip(other.as_slice())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl EmbeddingStore {
    /// Builds a store, checking shape, id uniqueness and row norms.
    pub fn new(dim: usize, matrix: Vec<f32>, ids: Vec<String>) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::Invariant("dim must be at least 1".into()));
        }
        if matrix.len() != ids.len() * dim {
            return Err(EmbedError::Invariant(format!(
                "{} floats do not form {} rows of dim {dim}",
                matrix.len(),
                ids.len()
            )));
        }
        let store = Self {
            dim,
            ids,
            matrix: Matrix::Owned(matrix),
        };
        store.check().map_err(EmbedError::Invariant)?;
        Ok(store)
    }

    pub fn from_vectors(
        dim: usize,
        ids: Vec<String>,
        vectors: Vec<EmbeddingVector>,
    ) -> Result<Self, EmbedError> {
        if ids.len() != vectors.len() {
            return Err(EmbedError::Invariant(format!(
                "{} ids for {} vectors",
                ids.len(),
                vectors.len()
            )));
        }
        let mut matrix = Vec::with_capacity(dim * vectors.len());
        for v in vectors {
            if v.dim() != dim {
                return Err(EmbedError::DimMismatch {
                    expected: dim,
                    found: v.dim(),
                });
            }
            matrix.extend_from_slice(v.as_slice());
        }
        Self::new(dim, matrix, ids)
    }

    pub fn empty(dim: usize) -> Result<Self, EmbedError> {
        Self::new(dim, Vec::new(), Vec::new())
    }

    fn check(&self) -> Result<(), String> {
        let mut seen = HashSet::with_capacity(self.ids.len());
        for id in &self.ids {
            if !seen.insert(id.as_str()) {
                return Err(format!("duplicate id {id:?}"));
            }
        }
        for (i, row) in self.rows().enumerate() {
            let norm = norm_f64(row);
            if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(format!("row {i} ({:?}) has norm {norm}", self.ids[i]));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// The whole row-major matrix.
    pub fn as_slice(&self) -> &[f32] {
        self.matrix.as_slice()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.as_slice()[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.as_slice().chunks_exact(self.dim)
    }

    pub fn is_mapped(&self) -> bool {
        matches!(self.matrix, Matrix::Mapped { .. })
    }

    /// Serialized form, byte for byte what [`write_store`] puts on disk.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(STORE_HEADER_LEN + self.as_slice().len() * 4);
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(&STORE_MAGIC)?;
        w.write_all(&STORE_VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for x in self.as_slice() {
            w.write_all(&x.to_le_bytes())?;
        }
        for id in &self.ids {
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
        }
        Ok(())
    }

    /// Parses a serialized store into an owned one.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EmbedError> {
        let layout = Layout::parse(bytes)?;
        let matrix = bytes[STORE_HEADER_LEN..layout.matrix_end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
            .collect();
        Self::assemble(layout, Matrix::Owned(matrix))
    }

    /// Maps a store file and scores it in place, without copying the matrix.
    ///
    /// The file must not be modified while the store is alive.
    pub fn open_mapped(path: &Path) -> Result<Self, EmbedError> {
        let io_err = |source| EmbedError::Io {
            path: path.to_owned(),
            source,
        };
        let file = File::open(path).map_err(io_err)?;
        // SAFETY: the map is read-only and callers are told not to modify the
        // file underneath a live store.
        let map = unsafe { Mmap::map(&file) }.map_err(io_err)?;
        let layout = Layout::parse(&map)?;
        if cfg!(target_endian = "big") {
            return Self::from_bytes(&map);
        }
        let len = layout.count * layout.dim;
        Self::assemble(layout, Matrix::Mapped { map, len })
    }

    fn assemble(layout: Layout, matrix: Matrix) -> Result<Self, EmbedError> {
        let store = Self {
            dim: layout.dim,
            ids: layout.ids,
            matrix,
        };
        store.check().map_err(EmbedError::CorruptStore)?;
        Ok(store)
    }
}

struct Layout {
    dim: usize,
    count: usize,
    matrix_end: usize,
    ids: Vec<String>,
}

impl Layout {
    fn parse(bytes: &[u8]) -> Result<Self, EmbedError> {
        let fmt_err = |m: String| EmbedError::Format(m);
        if bytes.len() < STORE_HEADER_LEN {
            return Err(fmt_err(format!(
                "{} bytes is shorter than the {STORE_HEADER_LEN}-byte header",
                bytes.len()
            )));
        }
        if bytes[0..4] != STORE_MAGIC {
            return Err(fmt_err(format!("bad magic {:?}", &bytes[0..4])));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let version = u32_at(4);
        if version != STORE_VERSION {
            return Err(fmt_err(format!("unsupported version {version}")));
        }
        let dim = u32_at(8) as usize;
        if dim == 0 {
            return Err(fmt_err("dim is 0".into()));
        }
        let count = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
        let matrix_end = usize::try_from(count)
            .ok()
            .and_then(|c| c.checked_mul(dim))
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| n.checked_add(STORE_HEADER_LEN))
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| fmt_err(format!("truncated: {count} rows of dim {dim} do not fit")))?;
        let count = count as usize;

        let mut ids = Vec::with_capacity(count.min(1 << 20));
        let mut pos = matrix_end;
        for i in 0..count {
            let len_bytes = bytes
                .get(pos..pos + 4)
                .ok_or_else(|| fmt_err(format!("truncated in id table at entry {i}")))?;
            let len = u32::from_le_bytes(len_bytes.try_into().expect("4 bytes")) as usize;
            pos += 4;
            let raw = bytes
                .get(pos..pos.saturating_add(len))
                .ok_or_else(|| fmt_err(format!("truncated in id table at entry {i}")))?;
            let id = std::str::from_utf8(raw)
                .map_err(|_| fmt_err(format!("id {i} is not UTF-8")))?;
            ids.push(id.to_owned());
            pos += len;
        }
        if pos != bytes.len() {
            return Err(fmt_err(format!("{} trailing bytes", bytes.len() - pos)));
        }
        Ok(Self {
            dim,
            count,
            matrix_end,
            ids,
        })
    }
}

pub fn write_store(store: &EmbeddingStore, path: &Path) -> Result<(), EmbedError> {
    let io_err = |source| EmbedError::Io {
        path: path.to_owned(),
        source,
    };
    store.check().map_err(EmbedError::Invariant)?;
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    store.write_to(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// Reads a store file into memory.
pub fn read_store(path: &Path) -> Result<EmbeddingStore, EmbedError> {
    let bytes = std::fs::read(path).map_err(|source| EmbedError::Io {
        path: path.to_owned(),
        source,
    })?;
    EmbeddingStore::from_bytes(&bytes)
}
