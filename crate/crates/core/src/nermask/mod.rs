//! Named-entity spans: BIO decoding, masking, span-level scoring, the NER
//! backend contract and per-year entity shares.
//!
//! All offsets are Unicode scalar value (char) indices into the article text,
//! half-open.

mod backend;
mod bio;
mod mask;
mod score;
mod shares;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use crate::metrics::Prf;
pub use backend::{annotate, HttpNerBackend, NerBackend, StubNerBackend};
pub use bio::{decode_bio, encode_bio, repair_tags};
pub use mask::{mask_spans, MaskedArticle, MaskedText, MASK_TOKEN};
pub use score::score_spans;
pub use shares::{entity_counts, entity_type_shares, AnnotatedArticle, YearShares};

#[derive(Debug, thiserror::Error)]
pub enum NerError {
    #[error("invalid token annotations: {0}")]
    Annotation(String),
    #[error("spans overlap: [{0}, {1}) and [{2}, {3})")]
    SpanOverlap(usize, usize, usize, usize),
    #[error("span [{start}, {end}) is out of bounds for text of {len} chars")]
    SpanBounds { start: usize, end: usize, len: usize },
    #[error("article {0:?} has no parseable year")]
    NoYear(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityClass {
    #[serde(rename = "PER")]
    Per,
    #[serde(rename = "ORG")]
    Org,
    #[serde(rename = "LOC")]
    Loc,
    #[serde(rename = "MISC")]
    Misc,
}

impl EntityClass {
    pub const ALL: [EntityClass; 4] = [Self::Per, Self::Org, Self::Loc, Self::Misc];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Per => "PER",
            Self::Org => "ORG",
            Self::Loc => "LOC",
            Self::Misc => "MISC",
        }
    }
}

impl fmt::Display for EntityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PER" => Ok(Self::Per),
            "ORG" => Ok(Self::Org),
            "LOC" => Ok(Self::Loc),
            "MISC" => Ok(Self::Misc),
            other => Err(format!("unknown entity class {other:?}")),
        }
    }
}

/// A BIO tag. Serialized as `O`, `B-PER`, `I-LOC`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Tag {
    O,
    B(EntityClass),
    I(EntityClass),
}

impl Tag {
    pub fn class(self) -> Option<EntityClass> {
        match self {
            Tag::O => None,
            Tag::B(c) | Tag::I(c) => Some(c),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(c) => write!(f, "B-{c}"),
            Tag::I(c) => write!(f, "I-{c}"),
        }
    }
}

impl FromStr for Tag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(Tag::O);
        }
        match s.split_once('-') {
            Some(("B", c)) => Ok(Tag::B(c.parse()?)),
            Some(("I", c)) => Ok(Tag::I(c.parse()?)),
            _ => Err(format!("unknown tag {s:?}")),
        }
    }
}

impl TryFrom<String> for Tag {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Tag> for String {
    fn from(t: Tag) -> String {
        t.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenAnnotation {
    pub token: String,
    pub start: usize,
    pub end: usize,
    pub tag: Tag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub class: EntityClass,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, class: EntityClass) -> Self {
        Self { start, end, class }
    }
}

/// Char offsets of every char boundary in `text`, including the end.
pub(crate) fn char_boundaries(text: &str) -> Vec<usize> {
    text.char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(text.len()))
        .collect()
}
