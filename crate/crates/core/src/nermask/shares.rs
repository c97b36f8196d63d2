use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{decode_bio, EntityClass, EntitySpan, NerError, TokenAnnotation};
use crate::corpus::Article;

/// An article with its tagger output; one row of a `ner.jsonl` file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedArticle {
    #[serde(flatten)]
    pub article: Article,
    pub annotations: Vec<TokenAnnotation>,
}

/// Entity-token shares for one year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearShares {
    pub year: i32,
    pub total_tokens: usize,
    pub shares: BTreeMap<EntityClass, f64>,
}

/// Counts spans per class.
pub fn entity_counts(spans: &[EntitySpan]) -> BTreeMap<EntityClass, usize> {
    let mut counts: BTreeMap<_, _> = EntityClass::ALL.iter().map(|&c| (c, 0)).collect();
    for s in spans {
        *counts.entry(s.class).or_default() += 1;
    }
    counts
}

/// Share of whitespace tokens falling inside an entity of each class, per
/// year. A token counts toward the first span it overlaps. Years with no
/// tokens are left out.
pub fn entity_type_shares(corpus: &[AnnotatedArticle]) -> Result<Vec<YearShares>, NerError> {
    #[derive(Default)]
    struct Acc {
        total: usize,
        per_class: BTreeMap<EntityClass, usize>,
    }
    let mut years: BTreeMap<i32, Acc> = BTreeMap::new();

    for row in corpus {
        let year = row
            .article
            .year()
            .ok_or_else(|| NerError::NoYear(row.article.id.clone()))?;
        let spans = decode_bio(&row.annotations)?;
        let acc = years.entry(year).or_default();
        let mut next_span = 0;
        for (start, end) in whitespace_tokens(&row.article.text) {
            while next_span < spans.len() && spans[next_span].end <= start {
                next_span += 1;
            }
            acc.total += 1;
            if let Some(s) = spans.get(next_span).filter(|s| s.start < end) {
                *acc.per_class.entry(s.class).or_default() += 1;
            }
        }
    }

    Ok(years
        .into_iter()
        .filter(|(_, acc)| acc.total > 0)
        .map(|(year, acc)| YearShares {
            year,
            total_tokens: acc.total,
            shares: EntityClass::ALL
                .iter()
                .map(|&c| {
                    let n = acc.per_class.get(&c).copied().unwrap_or(0);
                    (c, n as f64 / acc.total as f64)
                })
                .collect(),
        })
        .collect())
}

/// Char ranges of whitespace-separated tokens.
fn whitespace_tokens(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    let mut n = 0;
    for (i, ch) in text.chars().enumerate() {
        n = i + 1;
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, n));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nermask::{StubNerBackend, Tag};

    fn row(id: &str, date: &str, text: &str) -> AnnotatedArticle {
        AnnotatedArticle {
            article: Article {
                id: id.into(),
                source: "s".into(),
                date: date.into(),
                text: text.into(),
                headline: None,
            },
            annotations: StubNerBackend.tag_text(text),
        }
    }

    #[test]
    fn direct_ratio() {
        // 10 whitespace tokens, two of them inside a PER span.
        let r = row("a", "1900-01-01", "yes John Smith went to the market for some eggs");
        assert_eq!(r.annotations[1].tag, Tag::B(EntityClass::Per));
        let t = entity_type_shares(&[r]).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].total_tokens, 10);
        assert!((t[0].shares[&EntityClass::Per] - 0.2).abs() < 1e-12);
        assert_eq!(t[0].shares[&EntityClass::Loc], 0.0);
    }

    #[test]
    fn no_entities_and_two_years() {
        let t = entity_type_shares(&[
            row("a", "1900-01-01", "nothing to see"),
            row("b", "1901-01-01", "more of nothing"),
            row("c", "1900-05-01", "still nothing"),
        ])
        .unwrap();
        assert_eq!(t.iter().map(|y| y.year).collect::<Vec<_>>(), [1900, 1901]);
        assert_eq!(t[0].total_tokens, 5);
        for y in &t {
            assert!(y.shares.values().all(|&s| s == 0.0));
        }
    }

    #[test]
    fn shares_sum_to_at_most_one() {
        let t = entity_type_shares(&[row(
            "a",
            "1950-01-01",
            "The Senate and John Smith met in Paris with Union Pacific Railroad",
        )])
        .unwrap();
        let sum: f64 = t[0].shares.values().sum();
        assert!(sum <= 1.0 + 1e-12);
        assert!(sum > 0.5);
    }

    #[test]
    fn entity_count_table() {
        let spans = [
            EntitySpan::new(0, 1, EntityClass::Per),
            EntitySpan::new(2, 3, EntityClass::Per),
            EntitySpan::new(4, 5, EntityClass::Misc),
        ];
        let c = entity_counts(&spans);
        assert_eq!(c[&EntityClass::Per], 2);
        assert_eq!(c[&EntityClass::Org], 0);
        assert_eq!(c[&EntityClass::Misc], 1);
    }

    #[test]
    fn undated_row_is_an_error() {
        let mut r = row("a", "1900-01-01", "x");
        r.article.date = "someday".into();
        assert!(matches!(entity_type_shares(&[r]), Err(NerError::NoYear(_))));
    }
}
