//! Named-entity tagging toolkit for laboratory-protocol text.
//!
//! The crate covers the whole word-level labeling path:
//!
//! * [`corpus`]: tokens, sentences, documents, CoNLL and BRAT standoff I/O,
//!   the BIO span codec with validation and repair, and seeded dataset splits.
//! * [`subword`]: WordPiece tokenization against a vocabulary file,
//!   word/piece alignment, first-piece label projection and length chunking.
//! * [`crf`]: a trainable linear-chain CRF with gazetteer and orthographic
//!   features, exact log-space inference and L-BFGS/SGD training.
//! * [`eval`]: exact and partial span matching, error categorization and
//!   span-level Cohen's kappa.
//! * [`bridge`]: reads per-piece scores exported by an external encoder and
//!   decodes them to word-level tags through the same code path.
//!
//! Data-parallel loops (gradient accumulation, tagging, bridge decoding) run
//! on rayon when the `parallel` feature is enabled; see [`exec`].

pub mod bridge;
pub mod corpus;
pub mod crf;
mod error;
pub mod eval;
pub mod exec;
pub mod rng;
pub mod subword;

pub use error::{Error, Result};
