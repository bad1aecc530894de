use std::fmt;
use std::ops::Range;

use super::Vocabulary;
use crate::corpus::{BioTag, Sentence};
use crate::{Error, Result};

/// A sentence fanned out to subword pieces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignedSentence {
    pub words: Vec<String>,
    pub pieces: Vec<String>,
    /// Source word of each piece; non-decreasing and onto `0..words.len()`.
    pub word_index: Vec<usize>,
    /// First piece of each word.
    pub first_piece_index: Vec<usize>,
}

impl AlignedSentence {
    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    /// Pieces belonging to word `w`.
    pub fn piece_range(&self, w: usize) -> Range<usize> {
        let end = self
            .first_piece_index
            .get(w + 1)
            .copied()
            .unwrap_or(self.pieces.len());
        self.first_piece_index[w]..end
    }

    /// Piece count of each word.
    pub fn fan_out(&self) -> Vec<usize> {
        (0..self.word_count()).map(|w| self.piece_range(w).len()).collect()
    }
}

pub fn tokenize_sentence(sentence: &Sentence, vocab: &Vocabulary) -> AlignedSentence {
    let mut aligned = AlignedSentence {
        words: Vec::with_capacity(sentence.len()),
        pieces: Vec::with_capacity(sentence.len()),
        word_index: Vec::with_capacity(sentence.len()),
        first_piece_index: Vec::with_capacity(sentence.len()),
    };
    for (w, token) in sentence.tokens.iter().enumerate() {
        aligned.words.push(token.text.clone());
        aligned.first_piece_index.push(aligned.pieces.len());
        for piece in vocab.tokenize_word(&token.text) {
            aligned.pieces.push(piece);
            aligned.word_index.push(w);
        }
    }
    aligned
}

/// Training label of one piece.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PieceLabel {
    Tag(BioTag),
    /// Continuation piece; excluded from loss and scoring.
    Ignore,
}

impl fmt::Display for PieceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PieceLabel::Tag(t) => t.fmt(f),
            PieceLabel::Ignore => f.write_str("IGNORE"),
        }
    }
}

/// First piece of each word gets the word's tag, continuation pieces get
/// [`PieceLabel::Ignore`].
pub fn project_labels_to_pieces(
    aligned: &AlignedSentence,
    tags: &[BioTag],
) -> Result<Vec<(String, PieceLabel)>> {
    if tags.len() != aligned.word_count() {
        return Err(Error::LengthMismatch {
            expected: aligned.word_count(),
            actual: tags.len(),
        });
    }
    Ok(aligned
        .pieces
        .iter()
        .enumerate()
        .map(|(p, piece)| {
            let w = aligned.word_index[p];
            let label = if aligned.first_piece_index[w] == p {
                PieceLabel::Tag(tags[w].clone())
            } else {
                PieceLabel::Ignore
            };
            (piece.clone(), label)
        })
        .collect())
}

/// Each word takes the label of its first piece.
pub fn project_piece_labels_to_words(
    aligned: &AlignedSentence,
    piece_labels: &[BioTag],
) -> Result<Vec<BioTag>> {
    if piece_labels.len() != aligned.piece_count() {
        return Err(Error::LengthMismatch {
            expected: aligned.piece_count(),
            actual: piece_labels.len(),
        });
    }
    Ok(aligned
        .first_piece_index
        .iter()
        .map(|&p| piece_labels[p].clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subword::CaseMode;

    fn tags(s: &str) -> Vec<BioTag> {
        s.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    fn vocab() -> Vocabulary {
        Vocabulary::new(
            ["[UNK]", "un", "##aff", "##able", "protocol", "add", "sds"],
            CaseMode::Cased,
        )
        .unwrap()
    }

    #[test]
    fn single_piece_words() {
        let a = tokenize_sentence(&Sentence::untagged(["add", "sds", "protocol"]), &vocab());
        assert_eq!(a.word_index, [0, 1, 2]);
        assert_eq!(a.first_piece_index, [0, 1, 2]);
    }

    #[test]
    fn fan_out() {
        let a = tokenize_sentence(&Sentence::untagged(["unaffable", "protocol"]), &vocab());
        assert_eq!(a.pieces, ["un", "##aff", "##able", "protocol"]);
        assert_eq!(a.word_index, [0, 0, 0, 1]);
        assert_eq!(a.first_piece_index, [0, 3]);
        assert_eq!(a.fan_out(), [3, 1]);
    }

    #[test]
    fn control_word_stays_aligned() {
        let a = tokenize_sentence(&Sentence::untagged(["add", "\u{1}", "sds"]), &vocab());
        assert_eq!(a.pieces, ["add", "[UNK]", "sds"]);
        assert_eq!(a.word_index, [0, 1, 2]);
    }

    #[test]
    fn projections() {
        let a = tokenize_sentence(&Sentence::untagged(["unaffable"]), &vocab());
        let labels = project_labels_to_pieces(&a, &tags("B-Reagent")).unwrap();
        let labels: Vec<PieceLabel> = labels.into_iter().map(|(_, l)| l).collect();
        assert_eq!(
            labels,
            [PieceLabel::Tag(BioTag::begin("Reagent")), PieceLabel::Ignore, PieceLabel::Ignore]
        );

        let a = tokenize_sentence(&Sentence::untagged(["sds"]), &vocab());
        let labels = project_labels_to_pieces(&a, &tags("O")).unwrap();
        assert_eq!(labels, [("sds".to_string(), PieceLabel::Tag(BioTag::O))]);

        let a = tokenize_sentence(&Sentence::untagged(["un", "protocol"]), &vocab());
        assert_eq!(a.fan_out(), [1, 1]);
        let a = Vocabulary::new(["[UNK]", "x", "##y", "z"], CaseMode::Cased).unwrap();
        let a = tokenize_sentence(&Sentence::untagged(["xy", "z"]), &a);
        assert_eq!(
            project_piece_labels_to_words(&a, &tags("B-X I-X O")).unwrap(),
            tags("B-X O")
        );
        assert_eq!(project_piece_labels_to_words(&a, &tags("O O O")).unwrap(), tags("O O"));
        assert!(project_piece_labels_to_words(&a, &tags("O O")).is_err());
        assert!(project_labels_to_pieces(&a, &tags("O")).is_err());
    }
}
