//! BRAT standoff (`.txt` + `.ann`) ingestion. Only text-bound `T` lines are
//! read; relations, events and attributes are skipped.
//!
//! Sentences are the newline-separated lines of the text and tokens are its
//! whitespace-separated runs. Character offsets count Unicode scalar values,
//! as BRAT does.

use std::fmt::{self, Write as _};
use std::io::BufRead;

use super::{bio_encode, Document, EntitySpan, Sentence, Token};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentWarning {
    pub annotation: String,
    pub message: String,
}

impl fmt::Display for AlignmentWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.annotation, self.message)
    }
}

#[derive(Clone, Debug)]
pub struct BratDocument {
    pub document: Document,
    /// One entry per annotation that was not exactly token-aligned.
    pub warnings: Vec<AlignmentWarning>,
}

struct TextBound {
    id: String,
    label: String,
    start: usize,
    end: usize,
    order: usize,
}

struct Located {
    sentence: usize,
    word: usize,
    start: usize,
    end: usize,
}

fn tokenize(text: &str) -> (Vec<Sentence>, Vec<Located>) {
    let mut sentences = Vec::new();
    let mut located = Vec::new();
    let mut current: Vec<Token> = Vec::new();
    let mut word = String::new();
    let mut word_start = 0;
    let flush_word = |current: &mut Vec<Token>, word: &mut String, start: usize, end: usize| {
        if !word.is_empty() {
            current.push(Token::with_offsets(std::mem::take(word), start, end));
        }
    };
    let mut pos = 0;
    for ch in text.chars() {
        if ch.is_whitespace() {
            flush_word(&mut current, &mut word, word_start, pos);
            if ch == '\n' && !current.is_empty() {
                sentences.push(Sentence {
                    tokens: std::mem::take(&mut current),
                    tags: None,
                });
            }
        } else {
            if word.is_empty() {
                word_start = pos;
            }
            word.push(ch);
        }
        pos += 1;
    }
    flush_word(&mut current, &mut word, word_start, pos);
    if !current.is_empty() {
        sentences.push(Sentence {
            tokens: current,
            tags: None,
        });
    }
    for (si, s) in sentences.iter().enumerate() {
        for (wi, t) in s.tokens.iter().enumerate() {
            let (start, end) = t.offsets.unwrap();
            located.push(Located {
                sentence: si,
                word: wi,
                start,
                end,
            });
        }
    }
    (sentences, located)
}

fn parse_annotations<R: BufRead>(annotations: R, text_len: usize) -> Result<Vec<TextBound>> {
    let mut out = Vec::new();
    for (idx, line) in annotations.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if !line.starts_with('T') {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let id = fields.next().unwrap_or_default().to_string();
        let body = fields.next().ok_or_else(|| Error::Parse {
            line: line_no,
            message: "text-bound annotation without type and offsets".into(),
        })?;
        let (label, ranges) = body.split_once(' ').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("malformed annotation body {body:?}"),
        })?;
        // Discontinuous annotations ("s1 e1;s2 e2") are read as their hull.
        let mut start = usize::MAX;
        let mut end = 0;
        for range in ranges.split(';') {
            let bad = || Error::Parse {
                line: line_no,
                message: format!("malformed offsets {range:?}"),
            };
            let (s, e) = range.trim().split_once(' ').ok_or_else(bad)?;
            let s: usize = s.parse().map_err(|_| bad())?;
            let e: usize = e.parse().map_err(|_| bad())?;
            if s >= e {
                return Err(bad());
            }
            start = start.min(s);
            end = end.max(e);
        }
        if end > text_len {
            return Err(Error::AnnotationRange {
                id,
                start,
                end,
                len: text_len,
            });
        }
        out.push(TextBound {
            id,
            label: label.to_string(),
            start,
            end,
            order: out.len(),
        });
    }
    Ok(out)
}

/// Parses one standoff document. Annotations whose character range does not
/// coincide with token boundaries are widened to the covering tokens and
/// reported; annotations that cannot be placed (no token inside the range, or
/// overlapping an earlier-starting or longer annotation) are reported as dropped.
pub fn parse_brat<R: BufRead>(id: &str, text: &str, annotations: R) -> Result<BratDocument> {
    let text_len = text.chars().count();
    let (mut sentences, located) = tokenize(text);
    let mut bounds = parse_annotations(annotations, text_len)?;
    bounds.sort_by_key(|b| (b.start, std::cmp::Reverse(b.end), b.order));

    let mut warnings: Vec<AlignmentWarning> = Vec::new();
    let mut per_sentence: Vec<Vec<EntitySpan>> = vec![Vec::new(); sentences.len()];
    for b in &bounds {
        let covered: Vec<&Located> = located
            .iter()
            .filter(|t| t.start < b.end && b.start < t.end)
            .collect();
        let Some(first) = covered.first() else {
            warnings.push(AlignmentWarning {
                annotation: b.id.clone(),
                message: format!("range {}..{} covers no token; dropped", b.start, b.end),
            });
            continue;
        };
        let mut notes = Vec::new();
        let in_sentence: Vec<&&Located> =
            covered.iter().filter(|t| t.sentence == first.sentence).collect();
        if in_sentence.len() < covered.len() {
            notes.push("crosses a line break; truncated to its first line".to_string());
        }
        let last = in_sentence.last().unwrap();
        if first.start != b.start || last.end != b.end {
            notes.push(format!(
                "range {}..{} extended to token boundaries {}..{}",
                b.start, b.end, first.start, last.end
            ));
        }
        let span = EntitySpan::new(first.word, last.word, b.label.clone());
        let spans = &mut per_sentence[first.sentence];
        if let Some(clash) = spans.iter().find(|s| s.overlaps(&span)) {
            notes.push(format!("overlaps {clash}; dropped"));
        } else {
            spans.push(span);
        }
        if !notes.is_empty() {
            warnings.push(AlignmentWarning {
                annotation: b.id.clone(),
                message: notes.join("; "),
            });
        }
    }

    for (sentence, mut spans) in sentences.iter_mut().zip(per_sentence) {
        spans.sort();
        sentence.tags = Some(bio_encode(&spans, sentence.len())?);
    }
    Ok(BratDocument {
        document: Document {
            id: id.to_string(),
            sentences,
            source_text: Some(text.to_string()),
        },
        warnings,
    })
}

/// Renders a tagged document as `(text, ann)`. Sentences are joined with
/// newlines and tokens with single spaces unless the document carries its
/// source text and token offsets, in which case those are reused.
pub fn write_brat(document: &Document) -> Result<(String, String)> {
    let has_offsets = document.source_text.is_some()
        && document
            .sentences
            .iter()
            .all(|s| s.tokens.iter().all(|t| t.offsets.is_some()));
    let mut text = String::new();
    let mut offsets: Vec<Vec<(usize, usize)>> = Vec::new();
    if has_offsets {
        text = document.source_text.clone().unwrap();
        offsets = document
            .sentences
            .iter()
            .map(|s| s.tokens.iter().map(|t| t.offsets.unwrap()).collect())
            .collect();
    } else {
        let mut pos = 0;
        for (si, s) in document.sentences.iter().enumerate() {
            if si > 0 {
                text.push('\n');
                pos += 1;
            }
            let mut sent = Vec::new();
            for (wi, t) in s.tokens.iter().enumerate() {
                if wi > 0 {
                    text.push(' ');
                    pos += 1;
                }
                let len = t.text.chars().count();
                sent.push((pos, pos + len));
                text.push_str(&t.text);
                pos += len;
            }
            offsets.push(sent);
        }
        text.push('\n');
    }
    let chars: Vec<char> = text.chars().collect();
    let mut ann = String::new();
    let mut next_id = 1;
    for (si, s) in document.sentences.iter().enumerate() {
        let tags = s.tags.as_ref().ok_or_else(|| Error::Untagged {
            document: document.id.clone(),
            sentence: si,
        })?;
        for span in super::bio_decode(tags)? {
            let start = offsets[si][span.start].0;
            let end = offsets[si][span.end].1;
            let surface: String = chars[start..end].iter().collect();
            writeln!(ann, "T{next_id}\t{} {start} {end}\t{surface}", span.label).unwrap();
            next_id += 1;
        }
    }
    Ok((text, ann))
}
