use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CorpusError, Result};

/// One news article: a corpus row or a query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub source: String,
    /// ISO-8601 calendar date, `YYYY-MM-DD`.
    pub date: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub headline: Option<String>,
}

impl Article {
    pub fn year(&self) -> Option<i32> {
        parse_date(&self.date).map(|d| d.year())
    }
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

/// Checks a raw JSON record against the article schema. Unknown keys are
/// ignored.
pub fn validate_article(raw: &Value) -> Result<Article> {
    let obj = raw.as_object().ok_or(CorpusError::NotAnObject)?;
    let string_field = |key: &'static str| -> Result<String> {
        match obj.get(key) {
            None | Some(Value::Null) => Err(CorpusError::MissingField(key)),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(CorpusError::WrongType(key)),
        }
    };

    let id = string_field("id")?;
    if id.is_empty() {
        return Err(CorpusError::EmptyId);
    }
    let text = string_field("text")?;
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyText);
    }
    let source = string_field("source")?;
    let date = string_field("date")?;
    if parse_date(&date).is_none() {
        return Err(CorpusError::BadDate(date));
    }
    let headline = match obj.get("headline") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(CorpusError::WrongType("headline")),
    };
    Ok(Article {
        id,
        source,
        date,
        text,
        headline,
    })
}

/// Reads a whole JSONL article file, strictly: any invalid line or duplicate
/// id is an error. Blank lines are skipped.
pub fn read_articles_jsonl(path: &Path) -> Result<Vec<Article>> {
    let io_err = |source| CorpusError::Io {
        path: path.to_owned(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let wrap = |e: CorpusError| CorpusError::Line {
            line: i + 1,
            source: Box::new(e),
        };
        let value: Value = serde_json::from_str(&line)
            .map_err(|e| wrap(CorpusError::Manifest(format!("bad JSON: {e}"))))?;
        let article = validate_article(&value).map_err(wrap)?;
        if !seen.insert(article.id.clone()) {
            return Err(wrap(CorpusError::DuplicateId(article.id)));
        }
        out.push(article);
    }
    Ok(out)
}

pub fn write_articles_jsonl<'a>(
    path: &Path,
    articles: impl IntoIterator<Item = &'a Article>,
) -> Result<usize> {
    let io_err = |source| CorpusError::Io {
        path: path.to_owned(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    let mut n = 0;
    for a in articles {
        serde_json::to_writer(&mut w, a).map_err(|e| io_err(e.into()))?;
        w.write_all(b"\n").map_err(io_err)?;
        n += 1;
    }
    w.flush().map_err(io_err)?;
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    #[test]
    fn well_formed_record() {
        let a = validate_article(&json!({
            "id": "a1", "source": "ap", "date": "1943-01-04",
            "text": "Ice cream output cut.", "extra": 42
        }))
        .unwrap();
        assert_eq!(a.id, "a1");
        assert_eq!(a.year(), Some(1943));
        assert_eq!(a.headline, None);
    }

    #[test]
    fn rejects_bad_records() {
        let base = json!({"id": "a1", "source": "ap", "date": "1943-01-04", "text": "x"});
        let without = |k: &str| {
            let mut v = base.clone();
            v.as_object_mut().unwrap().remove(k);
            v
        };
        let with = |k: &str, val: Value| {
            let mut v = base.clone();
            v[k] = val;
            v
        };
        assert!(matches!(
            validate_article(&without("text")),
            Err(CorpusError::MissingField("text"))
        ));
        assert!(matches!(
            validate_article(&without("id")),
            Err(CorpusError::MissingField("id"))
        ));
        assert!(matches!(
            validate_article(&with("date", json!("1943-13-01"))),
            Err(CorpusError::BadDate(_))
        ));
        assert!(matches!(
            validate_article(&with("date", json!("1900-02-29"))),
            Err(CorpusError::BadDate(_))
        ));
        assert!(matches!(
            validate_article(&with("text", json!("  "))),
            Err(CorpusError::EmptyText)
        ));
        assert!(matches!(
            validate_article(&with("text", json!(7))),
            Err(CorpusError::WrongType("text"))
        ));
        assert!(matches!(
            validate_article(&json!([1, 2])),
            Err(CorpusError::NotAnObject)
        ));
    }

    fn arb_article() -> impl Strategy<Value = Article> {
        (
            "[a-z0-9_-]{1,12}",
            "[a-z ]{0,10}",
            (1600i32..2050, 1u32..=12, 1u32..=28),
            "\\PC*[a-zA-Z]\\PC*",
            proptest::option::of("\\PC{0,20}"),
        )
            .prop_map(|(id, source, (y, m, d), text, headline)| Article {
                id,
                source,
                date: format!("{y:04}-{m:02}-{d:02}"),
                text,
                headline,
            })
    }

    proptest! {
        #[test]
        fn serialize_then_validate_is_identity(a in arb_article()) {
            let v = serde_json::to_value(&a).unwrap();
            prop_assert_eq!(validate_article(&v).unwrap(), a);
        }
    }
}
