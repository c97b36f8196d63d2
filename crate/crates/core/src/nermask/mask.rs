use serde::{Deserialize, Serialize};

use super::{char_boundaries, EntitySpan, NerError};

pub const MASK_TOKEN: &str = "[MASK]";

/// Result of masking one text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedText {
    pub text: String,
    /// Number of `[MASK]` tokens emitted, after collapsing.
    pub mask_count: usize,
}

impl MaskedText {
    pub fn into_article(self, id: impl Into<String>) -> MaskedArticle {
        MaskedArticle {
            id: id.into(),
            masked_text: self.text,
            span_count: self.mask_count,
        }
    }
}

/// One row of a masked corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedArticle {
    pub id: String,
    pub masked_text: String,
    pub span_count: usize,
}

/// Replaces every span's surface text with `[MASK]`.
///
/// Spans separated only by whitespace (or touching) collapse into a single
/// `[MASK]`, and the whitespace between them is dropped. All other text is
/// kept byte for byte. Spans may be given in any order.
pub fn mask_spans(text: &str, spans: &[EntitySpan]) -> Result<MaskedText, NerError> {
    let bounds = char_boundaries(text);
    let n_chars = bounds.len() - 1;

    let mut sorted = spans.to_vec();
    sorted.sort_unstable_by_key(|s| (s.start, s.end));
    for s in &sorted {
        if s.start >= s.end || s.end > n_chars {
            return Err(NerError::SpanBounds {
                start: s.start,
                end: s.end,
                len: n_chars,
            });
        }
    }
    for w in sorted.windows(2) {
        if w[1].start < w[0].end {
            return Err(NerError::SpanOverlap(w[0].start, w[0].end, w[1].start, w[1].end));
        }
    }

    let mut out = String::with_capacity(text.len());
    let mut mask_count = 0;
    let mut cursor = 0; // byte offset of the first unconsumed char
    let mut prev_end: Option<usize> = None; // char offset
    for s in &sorted {
        let (b_start, b_end) = (bounds[s.start], bounds[s.end]);
        let gap = &text[cursor..b_start];
        let joins_previous = prev_end.is_some() && gap.chars().all(char::is_whitespace);
        if !joins_previous {
            out.push_str(gap);
            out.push_str(MASK_TOKEN);
            mask_count += 1;
        }
        cursor = b_end;
        prev_end = Some(s.end);
    }
    out.push_str(&text[cursor..]);
    Ok(MaskedText {
        text: out,
        mask_count,
    })
}
