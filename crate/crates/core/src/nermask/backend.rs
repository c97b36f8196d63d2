use serde::{Deserialize, Serialize};

use super::{EntityClass, Tag, TokenAnnotation};
use crate::backend::{BackendError, JsonClient, RetryPolicy};

/// A named-entity tagger. Implementations return one annotation list per
/// input text, in input order, with char offsets into that text.
pub trait NerBackend: Send + Sync {
    fn name(&self) -> &str;

    fn tag_batch(&self, texts: &[String]) -> Result<Vec<Vec<TokenAnnotation>>, BackendError>;
}

/// Tags a batch and checks the reply against the annotation contract.
pub fn annotate(
    backend: &dyn NerBackend,
    texts: &[String],
) -> Result<Vec<Vec<TokenAnnotation>>, BackendError> {
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let out = backend.tag_batch(texts)?;
    if out.len() != texts.len() {
        return Err(BackendError::Protocol(format!(
            "{} returned {} annotation lists for {} texts",
            backend.name(),
            out.len(),
            texts.len()
        )));
    }
    for (i, (text, anns)) in texts.iter().zip(&out).enumerate() {
        let n_chars = text.chars().count();
        let mut prev_end = 0;
        for a in anns {
            if a.start >= a.end || a.end > n_chars || a.start < prev_end {
                return Err(BackendError::Protocol(format!(
                    "text {i}: token [{}, {}) invalid for {n_chars} chars (previous token ended at {prev_end})",
                    a.start, a.end
                )));
            }
            prev_end = a.end;
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct NerRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct NerResponse {
    annotations: Vec<Vec<TokenAnnotation>>,
}

/// Remote tagger speaking `{texts}` → `{annotations}` JSON over HTTP.
#[derive(Debug, Clone)]
pub struct HttpNerBackend {
    client: JsonClient,
}

impl HttpNerBackend {
    pub fn new(url: impl Into<String>, policy: RetryPolicy) -> Self {
        Self {
            client: JsonClient::new(url, policy),
        }
    }
}

impl NerBackend for HttpNerBackend {
    fn name(&self) -> &str {
        self.client.url()
    }

    fn tag_batch(&self, texts: &[String]) -> Result<Vec<Vec<TokenAnnotation>>, BackendError> {
        let resp: NerResponse = self.client.post(&NerRequest { texts })?;
        Ok(resp.annotations)
    }
}

/// Deterministic rule-based tagger used in place of a neural model.
///
/// Maximal runs of capitalized word tokens are entities. A run's first token
/// is dropped when it opens a sentence, unless the gazetteer knows it. The run
/// class comes from the gazetteer (ORG over PER over LOC), defaulting to MISC.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubNerBackend;

const PER_WORDS: &[&str] = &[
    "john", "mary", "william", "george", "james", "charles", "frank", "alice", "henry", "edward",
    "thomas", "robert", "joseph", "mr", "mrs", "miss", "dr", "president", "senator", "gen",
    "general", "rep", "judge", "governor",
];
const LOC_WORDS: &[&str] = &[
    "paris", "london", "chicago", "boston", "alabama", "ohio", "texas", "washington", "berlin",
    "denver", "new", "york", "america", "england", "france", "germany", "iowa", "minn",
];
const ORG_WORDS: &[&str] = &[
    "senate", "congress", "railroad", "bank", "association", "company", "university", "union",
    "party", "league", "board", "department", "corporation", "committee",
];
/// Abbreviations whose trailing period does not end a sentence.
const ABBREVIATIONS: &[&str] = &["mr", "mrs", "ms", "dr", "st", "gen", "rep", "jr", "sr"];

fn lookup(word: &str) -> Option<EntityClass> {
    let w = word.to_lowercase();
    let w = w.as_str();
    if ORG_WORDS.contains(&w) {
        Some(EntityClass::Org)
    } else if PER_WORDS.contains(&w) {
        Some(EntityClass::Per)
    } else if LOC_WORDS.contains(&w) {
        Some(EntityClass::Loc)
    } else {
        None
    }
}

/// Word tokens are alphanumeric runs; any other non-space char stands alone.
fn tokenize(text: &str) -> Vec<(usize, usize, String)> {
    let mut out = Vec::new();
    let mut word: Option<(usize, String)> = None;
    for (i, ch) in text.chars().enumerate() {
        if ch.is_alphanumeric() {
            match &mut word {
                Some((_, w)) => w.push(ch),
                None => word = Some((i, ch.to_string())),
            }
            continue;
        }
        if let Some((start, w)) = word.take() {
            out.push((start, i, w));
        }
        if !ch.is_whitespace() {
            out.push((i, i + 1, ch.to_string()));
        }
    }
    if let Some((start, w)) = word {
        let end = start + w.chars().count();
        out.push((start, end, w));
    }
    out
}

fn is_capitalized(tok: &str) -> bool {
    tok.chars().next().is_some_and(char::is_uppercase)
}

impl StubNerBackend {
    pub fn tag_text(&self, text: &str) -> Vec<TokenAnnotation> {
        let tokens = tokenize(text);
        let mut tags = vec![Tag::O; tokens.len()];

        let sentence_start = |i: usize| -> bool {
            if i == 0 {
                return true;
            }
            let prev = tokens[i - 1].2.as_str();
            if !matches!(prev, "." | "!" | "?") {
                return false;
            }
            // "Mr. Smith" does not start a sentence.
            !(prev == "." && i >= 2 && ABBREVIATIONS.contains(&tokens[i - 2].2.to_lowercase().as_str()))
        };

        let mut i = 0;
        while i < tokens.len() {
            if !is_capitalized(&tokens[i].2) {
                i += 1;
                continue;
            }
            let mut end = i;
            while end < tokens.len() && is_capitalized(&tokens[end].2) {
                end += 1;
            }
            let mut start = i;
            if sentence_start(i) && lookup(&tokens[i].2).is_none() {
                start += 1;
            }
            if start < end {
                let classes: Vec<_> = tokens[start..end].iter().filter_map(|t| lookup(&t.2)).collect();
                let class = [EntityClass::Org, EntityClass::Per, EntityClass::Loc]
                    .into_iter()
                    .find(|c| classes.contains(c))
                    .unwrap_or(EntityClass::Misc);
                tags[start] = Tag::B(class);
                for t in &mut tags[start + 1..end] {
                    *t = Tag::I(class);
                }
            }
            i = end;
        }

        tokens
            .into_iter()
            .zip(tags)
            .map(|((start, end, token), tag)| TokenAnnotation {
                token,
                start,
                end,
                tag,
            })
            .collect()
    }
}

impl NerBackend for StubNerBackend {
    fn name(&self) -> &str {
        "stub"
    }

    fn tag_batch(&self, texts: &[String]) -> Result<Vec<Vec<TokenAnnotation>>, BackendError> {
        Ok(texts.iter().map(|t| self.tag_text(t)).collect())
    }
}
