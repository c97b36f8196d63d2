use std::collections::{BTreeSet, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::embed::inner_product;
use crate::metrics::Prf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairExample {
    pub a_id: String,
    pub b_id: String,
    pub label: Label,
    pub split: Split,
}

impl PairExample {
    /// The id pair in sorted order; equal for (a, b) and (b, a).
    pub fn key(&self) -> (&str, &str) {
        if self.a_id <= self.b_id {
            (&self.a_id, &self.b_id)
        } else {
            (&self.b_id, &self.a_id)
        }
    }
}

/// Articles covering the same story, e.g. one aggregator story page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryGroup {
    pub story_id: String,
    pub members: Vec<String>,
    /// News source of each member, parallel to `members` when present.
    #[serde(default)]
    pub sources: Vec<String>,
    #[serde(default)]
    pub topic_page_ids: BTreeSet<String>,
}

impl StoryGroup {
    pub fn new(story_id: impl Into<String>, members: Vec<String>) -> Self {
        Self {
            story_id: story_id.into(),
            members,
            sources: Vec::new(),
            topic_page_ids: BTreeSet::new(),
        }
    }
}

/// Every unordered pair of distinct members within each group, once.
/// Pairs come out as training positives; see [`assign_splits`].
pub fn assemble_positive_pairs(groups: &[StoryGroup]) -> Vec<PairExample> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for g in groups {
        for (i, a) in g.members.iter().enumerate() {
            for b in &g.members[i + 1..] {
                if a == b {
                    continue;
                }
                let key = if a < b { (a, b) } else { (b, a) };
                if seen.insert(key) {
                    out.push(PairExample {
                        a_id: a.clone(),
                        b_id: b.clone(),
                        label: Label::Positive,
                        split: Split::Train,
                    });
                }
            }
        }
    }
    out
}

/// Shuffles pairs with a seeded RNG and assigns train/val/test by the given
/// fractions (the test split takes the remainder).
pub fn assign_splits(mut pairs: Vec<PairExample>, train: f64, val: f64, seed: u64) -> Vec<PairExample> {
    let n = pairs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pairs.shuffle(&mut rng);
    let n_train = ((train * n as f64).round() as usize).min(n);
    let n_val = ((val * n as f64).round() as usize).min(n - n_train);
    for (i, p) in pairs.iter_mut().enumerate() {
        p.split = if i < n_train {
            Split::Train
        } else if i < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    pairs
}

/// Pair counts by split and label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    /// `cells[split][label]`, label 0 = positive, 1 = negative.
    pub cells: [[usize; 2]; 3],
}

fn split_idx(s: Split) -> usize {
    match s {
        Split::Train => 0,
        Split::Val => 1,
        Split::Test => 2,
    }
}

fn label_idx(l: Label) -> usize {
    match l {
        Label::Positive => 0,
        Label::Negative => 1,
    }
}

impl SplitCounts {
    pub fn get(&self, split: Split, label: Label) -> usize {
        self.cells[split_idx(split)][label_idx(label)]
    }

    pub fn total(&self, label: Label) -> usize {
        self.cells.iter().map(|row| row[label_idx(label)]).sum()
    }
}

impl fmt::Display for SplitCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8}{:>10}{:>10}", "split", "pos", "neg")?;
        for s in Split::ALL {
            let name = format!("{s:?}").to_lowercase();
            writeln!(
                f,
                "{name:<8}{:>10}{:>10}",
                self.get(s, Label::Positive),
                self.get(s, Label::Negative)
            )?;
        }
        write!(
            f,
            "{:<8}{:>10}{:>10}",
            "total",
            self.total(Label::Positive),
            self.total(Label::Negative)
        )
    }
}

pub fn split_counts(pairs: &[PairExample]) -> SplitCounts {
    let mut c = SplitCounts::default();
    for p in pairs {
        c.cells[split_idx(p.split)][label_idx(p.label)] += 1;
    }
    c
}

/// Inner product of each pair (cosine, for unit vectors).
pub fn pairwise_scores<A, B>(pairs: &[(A, B)]) -> Result<Vec<f32>, EvalError>
where
    A: AsRef<[f32]>,
    B: AsRef<[f32]>,
{
    pairs
        .iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let (a, b) = (a.as_ref(), b.as_ref());
            if a.len() != b.len() {
                return Err(EvalError::DimMismatch {
                    pair: i,
                    a: a.len(),
                    b: b.len(),
                });
            }
            Ok(inner_product(a, b))
        })
        .collect()
}

/// Labels a pair positive iff its cosine is at least `threshold`.
pub fn pairwise_classify<A, B>(pairs: &[(A, B)], threshold: f32) -> Result<Vec<bool>, EvalError>
where
    A: AsRef<[f32]>,
    B: AsRef<[f32]>,
{
    Ok(pairwise_scores(pairs)?
        .into_iter()
        .map(|s| s >= threshold)
        .collect())
}

/// P/R/F1 of the positive class.
pub fn pairwise_prf(pred: &[bool], gold: &[bool]) -> Result<Prf, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::Shape {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    let tp = pred.iter().zip(gold).filter(|(&p, &g)| p && g).count();
    let n_pred = pred.iter().filter(|&&p| p).count();
    let n_gold = gold.iter().filter(|&&g| g).count();
    Ok(Prf::from_counts(tp, n_pred, n_gold))
}

/// Picks the threshold (one of the observed scores) maximizing pairwise F1
/// on a labelled split. Among equally good thresholds the highest wins.
pub fn select_threshold(scores: &[f32], gold: &[bool]) -> Result<(f32, Prf), EvalError> {
    if scores.len() != gold.len() {
        return Err(EvalError::Shape {
            pred: scores.len(),
            gold: gold.len(),
        });
    }
    if scores.is_empty() {
        return Err(EvalError::Domain("no scores to choose a threshold from".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let n_gold = gold.iter().filter(|&&g| g).count();

    let mut best: Option<(f32, Prf)> = None;
    let mut tp = 0;
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        // take the whole run of equal scores: all of them are >= t
        while i < order.len() && scores[order[i]] == t {
            tp += usize::from(gold[order[i]]);
            i += 1;
        }
        let prf = Prf::from_counts(tp, i, n_gold);
        if best.is_none_or(|(_, b)| prf.f1 > b.f1) {
            best = Some((t, prf));
        }
    }
    Ok(best.expect("nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pairs_per_group() {
        let g = |n: usize| StoryGroup::new(format!("s{n}"), (0..n).map(|i| format!("g{n}-{i}")).collect());
        assert_eq!(assemble_positive_pairs(&[g(3)]).len(), 3);
        assert_eq!(assemble_positive_pairs(&[g(2)]).len(), 1);
        assert_eq!(assemble_positive_pairs(&[g(1)]).len(), 0);
        assert_eq!(assemble_positive_pairs(&[g(1), g(2), g(3), g(5)]).len(), 14);

        // the same pair listed by two groups is kept once, in either order
        let a = StoryGroup::new("a", vec!["x".into(), "y".into()]);
        let b = StoryGroup::new("b", vec!["y".into(), "x".into(), "x".into()]);
        let pairs = assemble_positive_pairs(&[a, b]);
        assert_eq!(pairs.len(), 1);
        assert!(pairs.iter().all(|p| p.a_id != p.b_id));
        let keys: HashSet<_> = pairs.iter().map(PairExample::key).collect();
        assert_eq!(keys.len(), pairs.len());
    }

    #[test]
    fn published_split_table_totals() {
        // Training/validation/test sizes of the retriever's pair data.
        let cells = [[12868, 12913], [2757, 2766], [2757, 2766]];
        let mut pairs = Vec::new();
        for (s, row) in Split::ALL.iter().zip(cells) {
            for (l, n) in [Label::Positive, Label::Negative].into_iter().zip(row) {
                for i in 0..n {
                    pairs.push(PairExample {
                        a_id: format!("{s:?}{l:?}{i}a"),
                        b_id: format!("{s:?}{l:?}{i}b"),
                        label: l,
                        split: *s,
                    });
                }
            }
        }
        let c = split_counts(&pairs);
        assert_eq!(c.cells, cells);
        assert_eq!(c.total(Label::Positive), 18_382);
        assert_eq!(c.total(Label::Negative), 18_445);
    }

    #[test]
    fn split_count_edges() {
        assert_eq!(split_counts(&[]), SplitCounts::default());
        let one = PairExample {
            a_id: "a".into(),
            b_id: "b".into(),
            label: Label::Positive,
            split: Split::Train,
        };
        let c = split_counts(&[one]);
        assert_eq!(c.cells, [[1, 0], [0, 0], [0, 0]]);
    }

    #[test]
    fn classify_boundaries() {
        let e1 = [1.0f32, 0.0];
        let e2 = [0.0f32, 1.0];
        let half = [0.5f32, 0.75f32.sqrt()];
        let pairs = [(e1, e1), (e1, e2), (e1, half)];
        assert_eq!(pairwise_classify(&pairs, 0.5).unwrap(), [true, false, true]);
        assert!(matches!(
            pairwise_classify(&[(vec![1.0f32], vec![1.0f32, 0.0])], 0.5),
            Err(EvalError::DimMismatch { pair: 0, .. })
        ));
    }

    #[test]
    fn pairwise_counts() {
        assert_eq!(pairwise_prf(&[true, false], &[true, false]).unwrap(), Prf::perfect());
        let p = pairwise_prf(&[false, false, false], &[true, false, true]).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (0.0, 0.0, 0.0));
        // TP=3, FP=1, FN=2, plus one TN
        let pred = [true, true, true, true, false, false, false];
        let gold = [true, true, true, false, true, true, false];
        let p = pairwise_prf(&pred, &gold).unwrap();
        assert!((p.precision - 0.75).abs() < 1e-12);
        assert!((p.recall - 0.6).abs() < 1e-12);
        assert!((p.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!(matches!(pairwise_prf(&[true], &[]), Err(EvalError::Shape { .. })));
    }

    #[test]
    fn threshold_selection() {
        let scores = [0.9, 0.8, 0.7, 0.4, 0.3];
        let gold = [true, true, true, false, false];
        let (t, prf) = select_threshold(&scores, &gold).unwrap();
        assert_eq!(t, 0.7);
        assert_eq!(prf, Prf::perfect());
        let pred: Vec<bool> = scores.iter().map(|&s| s >= t).collect();
        assert_eq!(pairwise_prf(&pred, &gold).unwrap(), prf);
    }

    #[test]
    fn seeded_splits() {
        let pairs: Vec<_> = (0..100)
            .map(|i| PairExample {
                a_id: format!("a{i}"),
                b_id: format!("b{i}"),
                label: Label::Positive,
                split: Split::Train,
            })
            .collect();
        let a = assign_splits(pairs.clone(), 0.7, 0.15, 1);
        assert_eq!(a, assign_splits(pairs, 0.7, 0.15, 1));
        let c = split_counts(&a);
        assert_eq!(c.cells, [[70, 0], [15, 0], [15, 0]]);
    }

    proptest! {
        #[test]
        fn raising_threshold_never_adds_positives(
            raw in prop::collection::vec((-1f32..1.0, -1f32..1.0), 1..30),
            t1 in -1f32..1.0, dt in 0f32..1.0,
        ) {
            let pairs: Vec<_> = raw.iter().map(|&(x, y)| ([x, y], [1.0f32, 0.0])).collect();
            let lo = pairwise_classify(&pairs, t1).unwrap();
            let hi = pairwise_classify(&pairs, t1 + dt).unwrap();
            for (l, h) in lo.iter().zip(&hi) {
                prop_assert!(!h || *l);
            }
        }

        #[test]
        fn pair_count_is_sum_of_binomials(sizes in prop::collection::vec(1usize..7, 0..6)) {
            let groups: Vec<_> = sizes.iter().enumerate().map(|(g, &n)| {
                StoryGroup::new(g.to_string(), (0..n).map(|i| format!("{g}/{i}")).collect())
            }).collect();
            let expect: usize = sizes.iter().map(|n| n * (n - 1) / 2).sum();
            prop_assert_eq!(assemble_positive_pairs(&groups).len(), expect);
        }
    }
}
