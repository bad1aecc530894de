//! WordPiece tokenization and word/piece alignment.

mod align;
mod chunk;
mod report;
mod vocab;

pub use align::{
    project_labels_to_pieces, project_piece_labels_to_words, tokenize_sentence, AlignedSentence,
    PieceLabel,
};
pub use chunk::{chunk_sentence, ChunkPlan, DEFAULT_BUDGET};
pub use report::{fragmentation_report, FragmentationReport, WordTypeStats};
pub use vocab::{load_vocab, wordpiece_tokenize, CaseMode, Vocabulary, CONTINUATION_PREFIX};
