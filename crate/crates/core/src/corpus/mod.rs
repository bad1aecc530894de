//! Corpus data model and its interchange formats.

mod bio;
mod brat;
mod conll;
mod label;
mod split;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use bio::{bio_decode, bio_encode, repair_bio, validate_bio, RepairMode, Violation};
pub use brat::{parse_brat, write_brat, AlignmentWarning, BratDocument};
pub use conll::{parse_conll, parse_conll_untagged, write_conll, ColumnSep};
pub use label::{BioTag, LabelSet, Scheme};
pub use split::split_dataset;

/// One word of a sentence, optionally anchored to character offsets
/// (half-open, counted in Unicode scalar values) in the source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub offsets: Option<(usize, usize)>,
}

impl Token {
    pub fn new(text: impl Into<String>) -> Self {
        Token {
            text: text.into(),
            offsets: None,
        }
    }

    pub fn with_offsets(text: impl Into<String>, start: usize, end: usize) -> Self {
        Token {
            text: text.into(),
            offsets: Some((start, end)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    /// Word-level tags, same length as `tokens` when present. Tags are not
    /// required to be BIO-valid; use [`Sentence::is_schema_valid`] or
    /// [`validate_bio`] before decoding spans.
    pub tags: Option<Vec<BioTag>>,
}

impl Sentence {
    pub fn untagged<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Sentence {
            tokens: words.into_iter().map(Token::new).collect(),
            tags: None,
        }
    }

    /// Builds a tagged sentence from `(word, tag)` pairs.
    pub fn tagged<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, BioTag)>,
        S: Into<String>,
    {
        let (tokens, tags): (Vec<_>, Vec<_>) = pairs
            .into_iter()
            .map(|(w, t)| (Token::new(w), t))
            .unzip();
        Sentence {
            tokens,
            tags: Some(tags),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }

    /// `false` for untagged sentences.
    pub fn is_schema_valid(&self) -> bool {
        self.tags
            .as_deref()
            .is_some_and(|tags| validate_bio(tags).is_empty())
    }

    /// Entity spans of a tagged, BIO-valid sentence.
    pub fn spans(&self) -> crate::Result<Vec<EntitySpan>> {
        match &self.tags {
            Some(tags) => bio_decode(tags),
            None => Ok(Vec::new()),
        }
    }

    pub fn without_tags(&self) -> Sentence {
        Sentence {
            tokens: self.tokens.clone(),
            tags: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
    pub source_text: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        Document {
            id: id.into(),
            sentences,
            source_text: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub label_set: LabelSet,
}

impl Corpus {
    /// Builds a corpus whose label set is inferred from the tags it contains.
    pub fn from_documents(documents: Vec<Document>) -> Self {
        let label_set = LabelSet::infer(&documents);
        Corpus {
            documents,
            label_set,
        }
    }

    pub fn empty() -> Self {
        Corpus {
            documents: Vec::new(),
            label_set: LabelSet::default(),
        }
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.documents.iter().flat_map(|d| d.sentences.iter())
    }

    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(|d| d.sentences.len()).sum()
    }

    pub fn token_count(&self) -> usize {
        self.sentences().map(Sentence::len).sum()
    }

    /// Copy of the corpus with every tag removed.
    pub fn without_tags(&self) -> Corpus {
        Corpus {
            documents: self
                .documents
                .iter()
                .map(|d| Document {
                    id: d.id.clone(),
                    sentences: d.sentences.iter().map(Sentence::without_tags).collect(),
                    source_text: d.source_text.clone(),
                })
                .collect(),
            label_set: self.label_set.clone(),
        }
    }
}

/// Inclusive word range `start..=end` carrying one entity type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, label: impl Into<String>) -> Self {
        EntitySpan {
            start,
            end,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlaps(&self, other: &EntitySpan) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn same_extent(&self, other: &EntitySpan) -> bool {
        self.start == other.start && self.end == other.end
    }
}

impl fmt::Display for EntitySpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.start, self.end, self.label)
    }
}
