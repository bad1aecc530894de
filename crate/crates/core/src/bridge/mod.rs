//! Per-piece scores from an external encoder, decoded to word-level tags.
//!
//! The wire format is line-oriented UTF-8, with `<TAB>` standing for a tab:
//!
//! ```text
//! #version 1
//! #alphabet<TAB>O<TAB>B-Reagent<TAB>I-Reagent
//! #vocab sha256:0123456789abcdef
//! #budget 512
//! doc<TAB>sentence<TAB>piece<TAB>surface<TAB>word_index<TAB>v1 v2 ... vm
//! ```
//!
//! Scores are raw logits ordered like the alphabet. Piece and word indices
//! are sentence-global: an exporter that ran a long sentence through the
//! encoder in several chunks writes the chunks' records one after another,
//! continuing the piece numbering, and the reader re-joins them.

mod decode;
mod format;

pub use decode::{decode_scores, export_scores, predict_corpus, DecodeMode};
pub use format::{
    read_bridge, write_bridge, BridgeFile, BridgeHeader, LogitsRecord, SentenceScores,
    BRIDGE_VERSION,
};
