//! Exact maximum-inner-product search over one or more embedding stores.
//!
//! Rows are numbered by a global ordinal: shard order, then row order. Hits
//! are ranked by score descending, ties broken by ascending ordinal. Scores
//! are float32 dot products accumulated sequentially within a row, so results
//! are bitwise reproducible and independent of how rows are split across
//! shards, blocks or threads.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{inner_product, EmbeddingStore};

pub const DEFAULT_BLOCK_ROWS: usize = 4096;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum IndexError {
    #[error("an index needs at least one shard")]
    EmptyIndex,
    #[error("dimension mismatch: index has {expected}, got {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("id {0:?} appears in more than one row")]
    DuplicateId(String),
    #[error("k must be at least 1, got {0}")]
    BadK(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub id: String,
    pub ordinal: usize,
    pub score: f32,
}

/// Total order used for ranking: better hits compare as `Less`.
fn rank_order(a: (f32, usize), b: (f32, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// Heap entry whose `Ord` puts the worst-ranked candidate on top.
#[derive(Clone, Copy)]
struct Candidate {
    score: f32,
    ordinal: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        rank_order((self.score, self.ordinal), (other.score, other.ordinal))
    }
}

/// Bounded top-k accumulator.
struct TopK {
    k: usize,
    heap: BinaryHeap<Candidate>,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    fn offer(&mut self, score: f32, ordinal: usize) {
        let c = Candidate { score, ordinal };
        if self.heap.len() < self.k {
            self.heap.push(c);
        } else if let Some(mut worst) = self.heap.peek_mut() {
            if c < *worst {
                *worst = c;
            }
        }
    }

    fn into_sorted(self) -> Vec<(f32, usize)> {
        self.heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| (c.score, c.ordinal))
            .collect()
    }
}

/// A read-only exact index over shards that share one dimension.
#[derive(Debug, Clone)]
pub struct FlatIndex {
    shards: Vec<Arc<EmbeddingStore>>,
    /// Global ordinal of each shard's first row.
    offsets: Vec<usize>,
    dim: usize,
    total: usize,
    by_id: HashMap<String, usize>,
    block_rows: usize,
}

impl FlatIndex {
    pub fn build(shards: Vec<Arc<EmbeddingStore>>) -> Result<Self, IndexError> {
        let dim = shards.first().ok_or(IndexError::EmptyIndex)?.dim();
        let mut offsets = Vec::with_capacity(shards.len());
        let mut by_id = HashMap::new();
        let mut total = 0;
        for s in &shards {
            if s.dim() != dim {
                return Err(IndexError::DimMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
            offsets.push(total);
            for (row, id) in s.ids().iter().enumerate() {
                if by_id.insert(id.clone(), total + row).is_some() {
                    return Err(IndexError::DuplicateId(id.clone()));
                }
            }
            total += s.len();
        }
        Ok(Self {
            shards,
            offsets,
            dim,
            total,
            by_id,
            block_rows: DEFAULT_BLOCK_ROWS,
        })
    }

    /// Convenience for a single store.
    pub fn from_store(store: EmbeddingStore) -> Result<Self, IndexError> {
        Self::build(vec![Arc::new(store)])
    }

    /// Sets how many rows each scan block (and parallel work unit) covers.
    pub fn with_block_rows(mut self, rows: usize) -> Self {
        self.block_rows = rows.max(1);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn shards(&self) -> &[Arc<EmbeddingStore>] {
        &self.shards
    }

    pub fn shard_offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn ordinal_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    /// Maps a global ordinal to `(shard, row)`.
    pub fn locate(&self, ordinal: usize) -> Option<(usize, usize)> {
        if ordinal >= self.total {
            return None;
        }
        let shard = self.offsets.partition_point(|&o| o <= ordinal) - 1;
        // skip empty shards that share an offset
        let shard = (shard..self.shards.len())
            .find(|&s| ordinal < self.offsets[s] + self.shards[s].len())
            .expect("ordinal below total");
        Some((shard, ordinal - self.offsets[shard]))
    }

    pub fn id_of(&self, ordinal: usize) -> Option<&str> {
        self.locate(ordinal)
            .map(|(s, r)| self.shards[s].ids()[r].as_str())
    }

    fn check_query(&self, query: &[f32], k: usize) -> Result<(), IndexError> {
        if k < 1 {
            return Err(IndexError::BadK(k));
        }
        if query.len() != self.dim {
            return Err(IndexError::DimMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        Ok(())
    }

    /// Top-k rows by inner product with `query`. `k` larger than the index
    /// returns every row.
    pub fn search(&self, query: &[f32], k: usize) -> Result<Vec<SearchHit>, IndexError> {
        self.check_query(query, k)?;
        let k = k.min(self.total);
        if k == 0 {
            return Ok(Vec::new());
        }
        let blocks = self.blocks();
        let partials: Vec<Vec<(f32, usize)>> = blocks
            .par_iter()
            .map(|&(shard, lo, hi)| self.scan(shard, lo, hi, query, k))
            .collect();
        let merged = merge_ranked(partials, k);
        Ok(self.resolve(merged))
    }

    /// Runs [`FlatIndex::search`] for every query, preserving query order.
    pub fn search_batch<Q>(&self, queries: &[Q], k: usize) -> Result<Vec<Vec<SearchHit>>, IndexError>
    where
        Q: AsRef<[f32]> + Sync,
    {
        for q in queries {
            self.check_query(q.as_ref(), k)?;
        }
        queries
            .par_iter()
            .map(|q| self.search(q.as_ref(), k))
            .collect()
    }

    /// Top-k restricted to one shard, with global ordinals. Feeding the
    /// per-shard lists to [`merge_topk`] reproduces [`FlatIndex::search`].
    pub fn search_shard(
        &self,
        shard: usize,
        query: &[f32],
        k: usize,
    ) -> Result<Vec<SearchHit>, IndexError> {
        self.check_query(query, k)?;
        let n = self.shards[shard].len();
        let best = self.scan(shard, 0, n, query, k.min(n));
        Ok(self.resolve(best))
    }

    /// `(shard, first_row, end_row)` scan blocks covering every row.
    fn blocks(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (s, store) in self.shards.iter().enumerate() {
            let mut lo = 0;
            while lo < store.len() {
                let hi = (lo + self.block_rows).min(store.len());
                out.push((s, lo, hi));
                lo = hi;
            }
        }
        out
    }

    fn scan(&self, shard: usize, lo: usize, hi: usize, query: &[f32], k: usize) -> Vec<(f32, usize)> {
        if k == 0 {
            return Vec::new();
        }
        let store = &self.shards[shard];
        let base = self.offsets[shard];
        let dim = self.dim;
        let mut top = TopK::new(k);
        let rows = &store.as_slice()[lo * dim..hi * dim];
        for (i, row) in rows.chunks_exact(dim).enumerate() {
            top.offer(inner_product(row, query), base + lo + i);
        }
        top.into_sorted()
    }

    fn resolve(&self, ranked: Vec<(f32, usize)>) -> Vec<SearchHit> {
        ranked
            .into_iter()
            .map(|(score, ordinal)| SearchHit {
                id: self.id_of(ordinal).expect("ordinal in range").to_owned(),
                ordinal,
                score,
            })
            .collect()
    }
}

fn merge_ranked(lists: Vec<Vec<(f32, usize)>>, k: usize) -> Vec<(f32, usize)> {
    lists
        .into_iter()
        .kmerge_by(|&a, &b| rank_order(a, b) == Ordering::Less)
        .dedup_by(|a, b| a.1 == b.1)
        .take(k)
        .collect()
}

/// Merges ranked hit lists (each sorted by score descending, then ordinal)
/// into the global top-k. Hits repeated across lists are kept once.
pub fn merge_topk(per_shard: &[Vec<SearchHit>], k: usize) -> Vec<SearchHit> {
    per_shard
        .iter()
        .map(|l| l.iter())
        .kmerge_by(|a, b| rank_order((a.score, a.ordinal), (b.score, b.ordinal)) == Ordering::Less)
        .dedup_by(|a, b| a.ordinal == b.ordinal)
        .take(k)
        .cloned()
        .collect()
}
