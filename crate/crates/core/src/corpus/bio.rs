//! BIO span codec.

use super::{BioTag, EntitySpan};
use crate::{Error, Result};

/// A position whose `I-X` tag does not continue an entity of type `X`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub position: usize,
    pub tag: BioTag,
    /// `None` at sentence start.
    pub previous: Option<BioTag>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RepairMode {
    /// A dangling `I-X` opens a new entity: `I-X` becomes `B-X`.
    #[default]
    Begin,
    /// A dangling `I-X` after an entity of another type joins that entity;
    /// after `O` or at sentence start it becomes `B-X`.
    Merge,
}

/// Tags for `n` words with the given spans. Adjacent spans each start with `B-`.
pub fn bio_encode(spans: &[EntitySpan], n: usize) -> Result<Vec<BioTag>> {
    let mut tags = vec![BioTag::O; n];
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (k, span) in spans.iter().enumerate() {
        if span.start > span.end || span.end >= n {
            return Err(Error::SpanOutOfRange {
                span: span.to_string(),
                len: n,
            });
        }
        for w in span.start..=span.end {
            if let Some(other) = owner[w] {
                return Err(Error::OverlappingSpans {
                    first: spans[other].to_string(),
                    second: span.to_string(),
                });
            }
            owner[w] = Some(k);
            tags[w] = if w == span.start {
                BioTag::begin(span.label.clone())
            } else {
                BioTag::inside(span.label.clone())
            };
        }
    }
    Ok(tags)
}

/// Spans of a BIO-valid tag sequence, sorted by start.
pub fn bio_decode(tags: &[BioTag]) -> Result<Vec<EntitySpan>> {
    if let Some(v) = validate_bio(tags).into_iter().next() {
        return Err(Error::InvalidBio {
            position: v.position,
            tag: v.tag.to_string(),
            previous: v
                .previous
                .map_or_else(|| "sentence start".to_string(), |p| p.to_string()),
        });
    }
    Ok(decode_unchecked(tags))
}

fn decode_unchecked(tags: &[BioTag]) -> Vec<EntitySpan> {
    let mut spans: Vec<EntitySpan> = Vec::new();
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            BioTag::O => {}
            BioTag::Entity { label, .. } if tag.is_begin() => {
                spans.push(EntitySpan::new(i, i, label.clone()));
            }
            BioTag::Entity { .. } => {
                if let Some(last) = spans.last_mut() {
                    last.end = i;
                }
            }
        }
    }
    spans
}

pub fn validate_bio(tags: &[BioTag]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut previous: Option<&BioTag> = None;
    for (position, tag) in tags.iter().enumerate() {
        if !tag.may_follow(previous) {
            out.push(Violation {
                position,
                tag: tag.clone(),
                previous: previous.cloned(),
            });
        }
        previous = Some(tag);
    }
    out
}

/// Rewrites every violating `I-X` so the result is BIO-valid. Each position is
/// judged against the already repaired previous tag.
pub fn repair_bio(tags: &[BioTag], mode: RepairMode) -> Vec<BioTag> {
    let mut out: Vec<BioTag> = Vec::with_capacity(tags.len());
    for tag in tags {
        let previous = out.last();
        let fixed = if tag.may_follow(previous) {
            tag.clone()
        } else {
            let label = tag.label().expect("only I- tags violate");
            match (mode, previous.and_then(BioTag::label)) {
                (RepairMode::Merge, Some(running)) => BioTag::inside(running.to_string()),
                _ => BioTag::begin(label.to_string()),
            }
        };
        out.push(fixed);
    }
    out
}
