use std::ops::Range;

use super::AlignedSentence;
use crate::{Error, Result};

/// Encoder input length, delimiters included.
pub const DEFAULT_BUDGET: usize = 512;

/// Word ranges that each fit the encoder budget once `[CLS]` and `[SEP]` are added.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChunkPlan {
    pub budget: usize,
    pub chunks: Vec<Range<usize>>,
}

impl ChunkPlan {
    /// Piece range of each chunk.
    pub fn piece_ranges(&self, aligned: &AlignedSentence) -> Vec<Range<usize>> {
        self.chunks
            .iter()
            .map(|c| aligned.first_piece_index[c.start]..aligned.piece_range(c.end - 1).end)
            .collect()
    }
}

/// Greedy fill: add words to the current chunk while its pieces plus the two
/// delimiters fit in `budget`, otherwise open a new chunk. Words are never split.
pub fn chunk_sentence(aligned: &AlignedSentence, budget: usize) -> Result<ChunkPlan> {
    let capacity = budget.saturating_sub(2);
    let mut chunks = Vec::new();
    let mut start = 0;
    let mut used = 0;
    for (w, pieces) in aligned.fan_out().into_iter().enumerate() {
        if pieces > capacity {
            return Err(Error::Chunk(format!(
                "word {w} ({:?}) has {pieces} pieces, more than the budget {budget} allows",
                aligned.words[w]
            )));
        }
        if used + pieces > capacity {
            chunks.push(start..w);
            start = w;
            used = 0;
        }
        used += pieces;
    }
    if aligned.word_count() > 0 {
        chunks.push(start..aligned.word_count());
    }
    Ok(ChunkPlan { budget, chunks })
}
