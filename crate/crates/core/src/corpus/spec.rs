use std::collections::BTreeSet;

use super::{CorpusError, Result};

const MIN_YEAR: i32 = 1500;
const MAX_YEAR: i32 = 2100;

/// Which slice of a dataset to read. `None` for years or states means "all".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSpec {
    pub dataset: String,
    pub years: Option<BTreeSet<i32>>,
    pub states: Option<BTreeSet<String>>,
}

impl CorpusSpec {
    pub fn all(dataset: impl Into<String>) -> Self {
        Self {
            dataset: dataset.into(),
            years: None,
            states: None,
        }
    }

    pub fn matches(&self, state: &str, year: i32) -> bool {
        let year_ok = self.years.as_ref().is_none_or(|ys| ys.contains(&year));
        let state_ok = self
            .states
            .as_ref()
            .is_none_or(|ss| ss.iter().any(|s| s.eq_ignore_ascii_case(state)));
        year_ok && state_ok
    }

    pub fn matches_dataset(&self, name: &str) -> bool {
        self.dataset.trim().eq_ignore_ascii_case(name.trim())
    }
}

/// Parses `dataset[:year-or-range[:state[,state...]]]`.
///
/// Ranges `A-B` are inclusive. An empty year or state field means "all".
pub fn parse_corpus_spec(spec: &str) -> Result<CorpusSpec> {
    let fail = |reason: String| CorpusError::SpecParse {
        spec: spec.to_owned(),
        reason,
    };

    let mut parts = spec.split(':');
    let dataset = parts.next().unwrap_or_default().trim();
    if dataset.is_empty() {
        return Err(fail("empty dataset name".into()));
    }
    let years = match parts.next().map(str::trim) {
        None | Some("") => None,
        Some(tok) => Some(parse_years(tok).map_err(fail)?),
    };
    let states = match parts.next() {
        None => None,
        Some(tok) => {
            let set: BTreeSet<String> = tok
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_owned)
                .collect();
            (!set.is_empty()).then_some(set)
        }
    };
    if parts.next().is_some() {
        return Err(fail("too many ':'-separated fields".into()));
    }
    Ok(CorpusSpec {
        dataset: dataset.to_owned(),
        years,
        states,
    })
}

fn parse_years(tok: &str) -> std::result::Result<BTreeSet<i32>, String> {
    let (lo, hi) = match tok.split_once('-') {
        Some((a, b)) => (parse_year(a)?, parse_year(b)?),
        None => {
            let y = parse_year(tok)?;
            (y, y)
        }
    };
    if lo > hi {
        return Err(format!("year range {lo}-{hi} is reversed"));
    }
    Ok((lo..=hi).collect())
}

fn parse_year(tok: &str) -> std::result::Result<i32, String> {
    let tok = tok.trim();
    if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("malformed year {tok:?}"));
    }
    let year: i32 = tok.parse().map_err(|_| format!("malformed year {tok:?}"))?;
    if !(MIN_YEAR..=MAX_YEAR).contains(&year) {
        return Err(format!("year {year} outside {MIN_YEAR}..={MAX_YEAR}"));
    }
    Ok(year)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_spec() {
        let s = parse_corpus_spec("american stories:1900:Alabama").unwrap();
        assert_eq!(s.dataset, "american stories");
        assert_eq!(s.years, Some(BTreeSet::from([1900])));
        assert_eq!(s.states, Some(BTreeSet::from(["Alabama".to_owned()])));
    }

    #[test]
    fn dataset_only_means_everything() {
        let s = parse_corpus_spec("american stories").unwrap();
        assert_eq!(s, CorpusSpec::all("american stories"));
        assert!(s.matches("Texas", 1777));
    }

    #[test]
    fn ranges_and_state_lists() {
        let s = parse_corpus_spec("american stories:1899-1901:Alabama, Ohio").unwrap();
        assert_eq!(s.years, Some(BTreeSet::from([1899, 1900, 1901])));
        assert!(s.matches("ohio", 1901));
        assert!(!s.matches("Texas", 1900));
        assert!(!s.matches("Ohio", 1902));

        let s = parse_corpus_spec("american stories::Alabama").unwrap();
        assert_eq!(s.years, None);
    }

    #[test]
    fn malformed() {
        for bad in [
            "american stories:190x:Alabama",
            ":1900",
            "  ",
            "american stories:1901-1899",
            "american stories:1900:Alabama:extra",
            "american stories:-5",
            "american stories:99999",
        ] {
            assert!(
                matches!(parse_corpus_spec(bad), Err(CorpusError::SpecParse { .. })),
                "{bad:?} should not parse"
            );
        }
    }
}
