use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Vocabulary, CONTINUATION_PREFIX};
use crate::corpus::Corpus;

#[derive(Clone, Debug, PartialEq)]
pub struct WordTypeStats {
    pub word: String,
    pub occurrences: usize,
    pub pieces: Vec<String>,
    pub unknown: bool,
}

impl WordTypeStats {
    /// Pieces with the continuation prefix removed.
    pub fn surfaces(&self) -> Vec<&str> {
        self.pieces
            .iter()
            .map(|p| p.strip_prefix(CONTINUATION_PREFIX).unwrap_or(p))
            .collect()
    }
}

/// Subword fragmentation statistics. Aggregates are over word occurrences.
#[derive(Clone, Debug, PartialEq)]
pub struct FragmentationReport {
    /// Word types in order of first occurrence.
    pub types: Vec<WordTypeStats>,
    pub total_words: usize,
    pub mean_pieces_per_word: f64,
    /// Share of words split into two or more pieces.
    pub fragmented_fraction: f64,
    /// Share of words containing an unknown piece.
    pub unknown_fraction: f64,
}

pub fn fragmentation_report(corpus: &Corpus, vocab: &Vocabulary) -> FragmentationReport {
    let mut types: Vec<WordTypeStats> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for word in corpus.sentences().flat_map(|s| s.words()) {
        match index.get(word) {
            Some(&i) => types[i].occurrences += 1,
            None => {
                let pieces = vocab.tokenize_word(word);
                let unknown = pieces.contains(&vocab.unknown_token);
                index.insert(word, types.len());
                types.push(WordTypeStats {
                    word: word.to_string(),
                    occurrences: 1,
                    pieces,
                    unknown,
                });
            }
        }
    }
    let total_words: usize = types.iter().map(|t| t.occurrences).sum();
    let ratio = |count: usize| {
        if total_words == 0 {
            0.0
        } else {
            count as f64 / total_words as f64
        }
    };
    let weighted = |f: &dyn Fn(&WordTypeStats) -> usize| -> usize {
        types.iter().map(|t| f(t) * t.occurrences).sum()
    };
    FragmentationReport {
        mean_pieces_per_word: ratio(weighted(&|t| t.pieces.len())),
        fragmented_fraction: ratio(weighted(&|t| usize::from(t.pieces.len() >= 2))),
        unknown_fraction: ratio(weighted(&|t| usize::from(t.unknown))),
        total_words,
        types,
    }
}

impl FragmentationReport {
    /// The `k` word types with the most pieces (ties by first occurrence).
    pub fn top_fragmented(&self, k: usize) -> Vec<&WordTypeStats> {
        let mut sorted: Vec<&WordTypeStats> = self.types.iter().collect();
        sorted.sort_by_key(|t| std::cmp::Reverse(t.pieces.len()));
        sorted.truncate(k);
        sorted
    }

    /// Tab-separated rendering: a `#`-prefixed summary block followed by one
    /// row per word type (`word, occurrences, piece count, unknown, pieces`),
    /// most fragmented first, limited to `k` rows.
    pub fn to_tsv(&self, k: usize) -> String {
        let mut out = String::new();
        writeln!(out, "#total_words\t{}", self.total_words).unwrap();
        writeln!(out, "#word_types\t{}", self.types.len()).unwrap();
        writeln!(out, "#mean_pieces_per_word\t{:.4}", self.mean_pieces_per_word).unwrap();
        writeln!(out, "#fragmented_fraction\t{:.4}", self.fragmented_fraction).unwrap();
        writeln!(out, "#unknown_fraction\t{:.4}", self.unknown_fraction).unwrap();
        out.push_str("word\toccurrences\tpieces\tunknown\tsurfaces\n");
        for t in self.top_fragmented(k) {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                t.word,
                t.occurrences,
                t.pieces.len(),
                u8::from(t.unknown),
                t.pieces.join(" ")
            )
            .unwrap();
        }
        out
    }
}
