use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::pipeline::stages::HitRow;

/// Header of an annotation sheet, in column order.
pub const SHEET_COLUMNS: [&str; 6] = [
    "modern_id",
    "historical_id",
    "modern_headline",
    "historical_headline",
    "on_topic",
    "topic_name",
];

/// One sheet line. `on_topic` and `topic_name` stay blank until a human
/// annotator fills them in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheetRow {
    pub modern_id: String,
    pub historical_id: String,
    pub modern_headline: String,
    pub historical_headline: String,
    pub on_topic: Option<bool>,
    pub topic_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicAnnotation {
    pub modern_id: String,
    pub historical_id: String,
    pub on_topic: bool,
    #[serde(default)]
    pub topic_name: String,
}

/// Share of annotated pairs judged on the same topic.
pub fn topic_match_rate(annotations: &[TopicAnnotation]) -> Result<f64, EvalError> {
    if annotations.is_empty() {
        return Err(EvalError::EmptyAnnotations);
    }
    let hits = annotations.iter().filter(|a| a.on_topic).count();
    Ok(hits as f64 / annotations.len() as f64)
}

/// Writes one blank sheet row per (query, hit) with rank ≤ `k`, queries in
/// order of first appearance. Headlines missing from `headlines` are left
/// blank. Returns the number of data rows.
pub fn export_annotation_sheet<W: Write>(
    out: W,
    hits: &[HitRow],
    k: usize,
    headlines: &HashMap<String, String>,
) -> Result<usize, EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SHEET_COLUMNS)?;
    let headline = |id: &str| headlines.get(id).map(String::as_str).unwrap_or("");
    let mut n = 0;
    for h in hits.iter().filter(|h| h.rank >= 1 && h.rank <= k) {
        w.write_record([
            h.query_id.as_str(),
            h.id.as_str(),
            headline(&h.query_id),
            headline(&h.id),
            "",
            "",
        ])?;
        n += 1;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(n)
}

fn parse_bool(row: usize, s: &str) -> Result<Option<bool>, EvalError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" => Ok(None),
        "true" | "t" | "yes" | "y" | "1" => Ok(Some(true)),
        "false" | "f" | "no" | "n" | "0" => Ok(Some(false)),
        other => Err(EvalError::Sheet {
            row,
            reason: format!("on_topic must be true or false, got {other:?}"),
        }),
    }
}

/// Reads a sheet back. Rows are numbered from 1 after the header.
pub fn read_annotation_sheet<R: Read>(input: R) -> Result<Vec<SheetRow>, EvalError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h.trim() == name);
    let mut cols = [0usize; 6];
    for (c, name) in cols.iter_mut().zip(SHEET_COLUMNS) {
        *c = col(name).ok_or_else(|| EvalError::Sheet {
            row: 0,
            reason: format!("missing column {name:?}"),
        })?;
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let get = |c: usize| rec.get(cols[c]).unwrap_or("").to_owned();
        let topic = get(5);
        out.push(SheetRow {
            modern_id: get(0),
            historical_id: get(1),
            modern_headline: get(2),
            historical_headline: get(3),
            on_topic: parse_bool(row, &get(4))?,
            topic_name: (!topic.trim().is_empty()).then_some(topic),
        });
    }
    Ok(out)
}

impl SheetRow {
    /// The completed annotation, or an error naming the row if `on_topic`
    /// is still blank.
    pub fn annotation(&self, row: usize) -> Result<TopicAnnotation, EvalError> {
        let on_topic = self.on_topic.ok_or_else(|| EvalError::Sheet {
            row,
            reason: "on_topic is blank".into(),
        })?;
        Ok(TopicAnnotation {
            modern_id: self.modern_id.clone(),
            historical_id: self.historical_id.clone(),
            on_topic,
            topic_name: self.topic_name.clone().unwrap_or_default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ann(on: bool) -> TopicAnnotation {
        TopicAnnotation {
            modern_id: "m".into(),
            historical_id: "h".into(),
            on_topic: on,
            topic_name: String::new(),
        }
    }

    fn hits(queries: usize, k: usize) -> Vec<HitRow> {
        (0..queries)
            .flat_map(|q| {
                (1..=k).map(move |rank| HitRow {
                    query_id: format!("q{q}"),
                    rank,
                    id: format!("h{q}-{rank}"),
                    score: 1.0 / rank as f32,
                })
            })
            .collect()
    }

    #[test]
    fn rates() {
        let r = |v: &[bool]| topic_match_rate(&v.iter().map(|&b| ann(b)).collect::<Vec<_>>()).unwrap();
        assert_eq!(r(&[true, false, true, true, false]), 0.6);
        assert_eq!(r(&[true; 4]), 1.0);
        assert!((r(&[true, true, true, false, true, true, true]) - 6.0 / 7.0).abs() < 1e-12);
        assert!(matches!(topic_match_rate(&[]), Err(EvalError::EmptyAnnotations)));
    }

    #[test]
    fn sheet_sizes() {
        let none = HashMap::new();
        let mut buf = Vec::new();
        assert_eq!(export_annotation_sheet(&mut buf, &hits(70, 5), 5, &none).unwrap(), 350);
        assert_eq!(read_annotation_sheet(&buf[..]).unwrap().len(), 350);

        let mut buf = Vec::new();
        assert_eq!(export_annotation_sheet(&mut buf, &hits(4, 5), 1, &none).unwrap(), 4);

        let mut buf = Vec::new();
        assert_eq!(export_annotation_sheet(&mut buf, &[], 5, &none).unwrap(), 0);
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), SHEET_COLUMNS.join(","));
    }

    #[test]
    fn sheet_round_trip() {
        let mut heads = HashMap::new();
        heads.insert("q0".to_string(), "Free cones, today only".to_string());
        let mut buf = Vec::new();
        export_annotation_sheet(&mut buf, &hits(1, 2), 5, &heads).unwrap();
        let rows = read_annotation_sheet(&buf[..]).unwrap();
        assert_eq!(rows[0].modern_headline, "Free cones, today only");
        assert_eq!(rows[0].historical_headline, "");
        assert_eq!((rows[0].on_topic, rows[0].topic_name.as_deref()), (None, None));
        assert!(rows[0].annotation(1).is_err());

        let filled = "modern_id,historical_id,modern_headline,historical_headline,on_topic,topic_name\n\
                      m,h,a,b,True,Food\nm,h2,a,c,maybe,\n";
        assert!(matches!(read_annotation_sheet(filled.as_bytes()), Err(EvalError::Sheet { row: 2, .. })));
    }

    proptest! {
        #[test]
        fn rate_is_order_free(mut v in prop::collection::vec(any::<bool>(), 1..40), seed in any::<u64>()) {
            let a: Vec<_> = v.iter().map(|&b| ann(b)).collect();
            let r1 = topic_match_rate(&a).unwrap();
            let n = v.len();
            v.rotate_left((seed as usize) % n);
            v.reverse();
            let b: Vec<_> = v.iter().map(|&b| ann(b)).collect();
            prop_assert_eq!(r1, topic_match_rate(&b).unwrap());
        }
    }
}
