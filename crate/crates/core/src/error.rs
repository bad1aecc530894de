use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: tag {tag:?} does not match O|B-<type>|I-<type>")]
    Schema { line: usize, tag: String },

    #[error("invalid tag {0:?}")]
    InvalidTag(String),

    #[error("invalid label set: {0}")]
    LabelSet(String),

    #[error("document {document:?}, sentence {sentence}: sentence has no tags")]
    Untagged { document: String, sentence: usize },

    #[error("overlapping spans {first} and {second}")]
    OverlappingSpans { first: String, second: String },

    #[error("span {span} lies outside a sentence of length {len}")]
    SpanOutOfRange { span: String, len: usize },

    #[error("tag sequence is not BIO-valid at position {position}: {tag} follows {previous}")]
    InvalidBio {
        position: usize,
        tag: String,
        previous: String,
    },

    #[error("annotation {id}: character range {start}..{end} exceeds text length {len}")]
    AnnotationRange {
        id: String,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("split: {0}")]
    Split(String),

    #[error("vocabulary: {0}")]
    Vocab(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("chunking: {0}")]
    Chunk(String),

    #[error("corpora are not token-aligned: {0}")]
    Misaligned(String),

    #[error("model: {0}")]
    Model(String),

    #[error("training: {0}")]
    Train(String),

    #[error("bridge: {0}")]
    Bridge(String),

    #[error("config: {0}")]
    Config(String),
}
