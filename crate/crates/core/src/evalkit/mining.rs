use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{EvalError, StoryGroup};
use crate::embed::EmbeddingStore;

/// Per-article metadata used to rule out negatives.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolMeta {
    pub source: String,
    #[serde(default)]
    pub story_ids: BTreeSet<String>,
    #[serde(default)]
    pub topic_page_ids: BTreeSet<String>,
}

impl PoolMeta {
    fn shares_page(&self, other: &PoolMeta) -> bool {
        !self.story_ids.is_disjoint(&other.story_ids)
            || !self.topic_page_ids.is_disjoint(&other.topic_page_ids)
    }

    /// Metadata per article id from story groups. Members without a listed
    /// source get an empty source.
    pub fn from_groups(groups: &[StoryGroup]) -> HashMap<String, PoolMeta> {
        let mut out: HashMap<String, PoolMeta> = HashMap::new();
        for g in groups {
            for (i, id) in g.members.iter().enumerate() {
                let m = out.entry(id.clone()).or_default();
                if let Some(src) = g.sources.get(i) {
                    m.source = src.clone();
                }
                m.story_ids.insert(g.story_id.clone());
                m.topic_page_ids.extend(g.topic_page_ids.iter().cloned());
            }
        }
        out
    }
}

/// Candidate articles for negative mining. Vectors need not be normalized.
#[derive(Debug, Clone)]
pub struct NegativePool {
    ids: Vec<String>,
    vectors: Vec<Vec<f32>>,
    meta: Vec<PoolMeta>,
    ordinal: HashMap<String, usize>,
}

impl NegativePool {
    pub fn new(ids: Vec<String>, vectors: Vec<Vec<f32>>, meta: Vec<PoolMeta>) -> Result<Self, EvalError> {
        if ids.len() != meta.len() || ids.len() != vectors.len() {
            return Err(EvalError::PoolShape {
                ids: ids.len(),
                meta: meta.len().min(vectors.len()),
            });
        }
        if let Some(dim) = vectors.first().map(Vec::len) {
            if let Some((i, v)) = vectors.iter().enumerate().find(|(_, v)| v.len() != dim) {
                return Err(EvalError::DimMismatch { pair: i, a: dim, b: v.len() });
            }
        }
        let mut ordinal = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if ordinal.insert(id.clone(), i).is_some() {
                return Err(EvalError::Domain(format!("duplicate pool id {id:?}")));
            }
        }
        Ok(Self { ids, vectors, meta, ordinal })
    }

    /// Pairs a store's rows with metadata looked up by id.
    pub fn from_store(store: &EmbeddingStore, meta: &HashMap<String, PoolMeta>) -> Result<Self, EvalError> {
        let m: Vec<PoolMeta> = store
            .ids()
            .iter()
            .filter_map(|id| meta.get(id).cloned())
            .collect();
        if m.len() != store.len() {
            return Err(EvalError::PoolShape { ids: store.len(), meta: m.len() });
        }
        let vectors = store.rows().map(<[f32]>::to_vec).collect();
        Self::new(store.ids().to_vec(), vectors, m)
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
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeChoice {
    pub id: String,
    pub cosine: f64,
    /// True when no same-source candidate existed and the best
    /// other-source article was taken instead.
    pub cross_source: bool,
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0f64, 0f64, 0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Closest pool article (by cosine) from the anchor's source that shares no
/// story or topic page with it. With no such article, the closest article
/// from any other source that shares no page. Ties go to the lower ordinal.
pub fn mine_hard_negative(pool: &NegativePool, anchor_id: &str) -> Result<NegativeChoice, EvalError> {
    let &a = pool
        .ordinal
        .get(anchor_id)
        .ok_or_else(|| EvalError::UnknownAnchor(anchor_id.to_owned()))?;
    let anchor_meta = &pool.meta[a];
    let anchor_vec = &pool.vectors[a];

    let mut same: Option<(usize, f64)> = None;
    let mut other: Option<(usize, f64)> = None;
    for (i, (v, m)) in pool.vectors.iter().zip(&pool.meta).enumerate() {
        if i == a || anchor_meta.shares_page(m) {
            continue;
        }
        let c = cosine(anchor_vec, v);
        let slot = if m.source == anchor_meta.source { &mut same } else { &mut other };
        if slot.is_none_or(|(_, best)| c > best) {
            *slot = Some((i, c));
        }
    }
    let (i, cosine, cross_source) = match (same, other) {
        (Some((i, c)), _) => (i, c, false),
        (None, Some((i, c))) => (i, c, true),
        (None, None) => return Err(EvalError::NoNegativeAvailable(anchor_id.to_owned())),
    };
    Ok(NegativeChoice {
        id: pool.ids[i].clone(),
        cosine,
        cross_source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn meta(source: &str, stories: &[&str], topics: &[&str]) -> PoolMeta {
        PoolMeta {
            source: source.into(),
            story_ids: stories.iter().map(|s| s.to_string()).collect(),
            topic_page_ids: topics.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn pool(rows: Vec<(&str, Vec<f32>, PoolMeta)>) -> NegativePool {
        let (ids, rest): (Vec<_>, Vec<_>) = rows.into_iter().map(|(i, v, m)| (i.to_string(), (v, m))).unzip();
        let (vs, ms) = rest.into_iter().unzip();
        NegativePool::new(ids, vs, ms).unwrap()
    }

    #[test]
    fn single_legal_candidate() {
        // b is closest but on the same story; c is off-topic but another source.
        let p = pool(vec![
            ("a", vec![1.0, 0.0], meta("x", &["s1"], &["t1"])),
            ("b", vec![0.99, 0.1], meta("x", &["s1"], &[])),
            ("c", vec![0.9, 0.3], meta("y", &[], &[])),
            ("d", vec![0.2, 1.0], meta("x", &["s2"], &["t2"])),
        ]);
        let n = mine_hard_negative(&p, "a").unwrap();
        assert_eq!(n.id, "d");
        assert!(!n.cross_source);
    }

    #[test]
    fn fallback_and_exhaustion() {
        let p = pool(vec![
            ("a", vec![1.0, 0.0], meta("x", &["s1"], &[])),
            ("b", vec![0.5, 0.5], meta("y", &[], &[])),
            ("c", vec![0.9, 0.1], meta("z", &[], &[])),
            ("d", vec![1.0, 0.0], meta("x", &["s1"], &[])),
        ]);
        let n = mine_hard_negative(&p, "a").unwrap();
        assert_eq!((n.id.as_str(), n.cross_source), ("c", true));

        let solo = pool(vec![("a", vec![1.0], meta("x", &[], &[]))]);
        assert!(matches!(mine_hard_negative(&solo, "a"), Err(EvalError::NoNegativeAvailable(_))));
        assert!(matches!(mine_hard_negative(&solo, "zz"), Err(EvalError::UnknownAnchor(_))));
    }

    #[test]
    fn ties_take_lower_ordinal() {
        let p = pool(vec![
            ("a", vec![1.0, 0.0], meta("x", &[], &[])),
            ("b", vec![0.0, 1.0], meta("x", &[], &[])),
            ("c", vec![0.0, 2.0], meta("x", &[], &[])),
        ]);
        assert_eq!(mine_hard_negative(&p, "a").unwrap().id, "b");
    }

    #[test]
    fn meta_from_groups() {
        let mut g = StoryGroup::new("s1", vec!["a".into(), "b".into()]);
        g.sources = vec!["x".into(), "y".into()];
        g.topic_page_ids.insert("t".into());
        let m = PoolMeta::from_groups(&[g, StoryGroup::new("s2", vec!["a".into()])]);
        assert_eq!(m["a"], meta("x", &["s1", "s2"], &["t"]));
        assert_eq!(m["b"], meta("y", &["s1"], &["t"]));
    }

    proptest! {
        #[test]
        fn scaling_and_story_exclusion(
            vecs in prop::collection::vec(prop::collection::vec(-1f32..1.0, 3), 2..12),
            sources in prop::collection::vec(0u8..2, 12),
            stories in prop::collection::vec(0u8..4, 12),
            scale in 0.1f32..10.0,
        ) {
            let n = vecs.len();
            let ids: Vec<String> = (0..n).map(|i| format!("a{i}")).collect();
            let metas: Vec<PoolMeta> = (0..n)
                .map(|i| meta(&sources[i].to_string(), &[&stories[i].to_string()], &[]))
                .collect();
            let scaled: Vec<Vec<f32>> = vecs.iter().map(|v| v.iter().map(|x| x * scale).collect()).collect();
            let p1 = NegativePool::new(ids.clone(), vecs, metas.clone()).unwrap();
            let p2 = NegativePool::new(ids, scaled, metas.clone()).unwrap();
            let r1 = mine_hard_negative(&p1, "a0");
            let r2 = mine_hard_negative(&p2, "a0");
            match (r1, r2) {
                (Ok(x), Ok(y)) => {
                    // f32 rescaling rounds, so only a near-tie may flip
                    prop_assert!(x.id == y.id || (x.cosine - y.cosine).abs() < 1e-6);
                    let j: usize = x.id[1..].parse().unwrap();
                    prop_assert!(j != 0);
                    prop_assert!(metas[j].story_ids.is_disjoint(&metas[0].story_ids));
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "scaling changed availability"),
            }
        }
    }
}
