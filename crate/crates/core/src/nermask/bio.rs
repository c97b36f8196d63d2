use super::{EntitySpan, NerError, Tag, TokenAnnotation};

/// Decodes BIO-tagged tokens into entity spans.
///
/// A run `B-X (I-X)*` becomes one span from the first token's start to the
/// last token's end. An `I-X` that does not continue an `X` span opens a new
/// one, as if it were `B-X`.
pub fn decode_bio(annotations: &[TokenAnnotation]) -> Result<Vec<EntitySpan>, NerError> {
    check_tokens(annotations.iter().map(|a| (a.start, a.end)))?;

    let mut spans: Vec<EntitySpan> = Vec::new();
    let mut open = false;
    for ann in annotations {
        match ann.tag {
            Tag::O => open = false,
            Tag::I(class) if open && spans.last().is_some_and(|s| s.class == class) => {
                spans.last_mut().expect("open span").end = ann.end;
            }
            Tag::B(class) | Tag::I(class) => {
                spans.push(EntitySpan::new(ann.start, ann.end, class));
                open = true;
            }
        }
    }
    Ok(spans)
}

/// Rewrites dangling `I-X` tags to `B-X`; the result decodes to the same
/// spans and is a fixed point of `encode_bio ∘ decode_bio`.
pub fn repair_tags(tags: &[Tag]) -> Vec<Tag> {
    let mut prev = Tag::O;
    tags.iter()
        .map(|&t| {
            let fixed = match t {
                Tag::I(c) if prev.class() != Some(c) => Tag::B(c),
                other => other,
            };
            prev = fixed;
            fixed
        })
        .collect()
}

/// Encodes spans as BIO tags over a token sequence given as `(start, end)`
/// char ranges. Every span must begin at a token start and end at a token end.
pub fn encode_bio(tokens: &[(usize, usize)], spans: &[EntitySpan]) -> Result<Vec<Tag>, NerError> {
    check_tokens(tokens.iter().copied())?;
    let mut sorted = spans.to_vec();
    sorted.sort_unstable();

    let mut tags = vec![Tag::O; tokens.len()];
    let mut t = 0;
    let mut prev_end = 0;
    for span in &sorted {
        if span.start >= span.end || span.start < prev_end {
            return Err(NerError::Annotation(format!(
                "span [{}, {}) is empty or overlaps its predecessor",
                span.start, span.end
            )));
        }
        while t < tokens.len() && tokens[t].0 < span.start {
            t += 1;
        }
        if t == tokens.len() || tokens[t].0 != span.start {
            return Err(NerError::Annotation(format!(
                "span start {} is not a token boundary",
                span.start
            )));
        }
        tags[t] = Tag::B(span.class);
        t += 1;
        while t < tokens.len() && tokens[t].1 <= span.end {
            tags[t] = Tag::I(span.class);
            t += 1;
        }
        if tokens[t - 1].1 != span.end {
            return Err(NerError::Annotation(format!(
                "span end {} is not a token boundary",
                span.end
            )));
        }
        prev_end = span.end;
    }
    Ok(tags)
}

fn check_tokens(ranges: impl Iterator<Item = (usize, usize)>) -> Result<(), NerError> {
    let mut prev_end = 0;
    for (i, (start, end)) in ranges.enumerate() {
        if start >= end {
            return Err(NerError::Annotation(format!(
                "token {i} has empty range [{start}, {end})"
            )));
        }
        if start < prev_end {
            return Err(NerError::Annotation(format!(
                "token {i} at [{start}, {end}) overlaps or precedes the previous token"
            )));
        }
        prev_end = end;
    }
    Ok(())
}
