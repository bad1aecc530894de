use std::collections::HashMap;
use std::io::BufRead;

use sha2::{Digest, Sha256};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::{Error, Result};

pub const CONTINUATION_PREFIX: &str = "##";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CaseMode {
    #[default]
    Cased,
    /// Lowercase and strip combining accents before matching.
    Uncased,
}

#[derive(Clone, Debug)]
pub struct Vocabulary {
    pieces: Vec<String>,
    index: HashMap<String, u32>,
    pub unknown_token: String,
    pub sequence_start: String,
    pub sequence_end: String,
    /// Longer words map straight to the unknown token.
    pub max_word_chars: usize,
    pub case_mode: CaseMode,
    /// Split words at punctuation characters before WordPiece, as the
    /// standard BERT pre-tokenizer does. Each punctuation character becomes
    /// its own sub-word, which starts without the continuation prefix.
    pub split_punctuation: bool,
}

/// Reads one piece per line. Duplicate lines are rejected and `[UNK]` must be present.
pub fn load_vocab<R: BufRead>(input: R, case_mode: CaseMode) -> Result<Vocabulary> {
    let mut pieces = Vec::new();
    let mut index = HashMap::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let piece = line.strip_suffix('\r').unwrap_or(&line).to_string();
        if piece.is_empty() {
            return Err(Error::Vocab(format!("line {}: empty piece", i + 1)));
        }
        if index.insert(piece.clone(), pieces.len() as u32).is_some() {
            return Err(Error::Vocab(format!("line {}: duplicate piece {piece:?}", i + 1)));
        }
        pieces.push(piece);
    }
    Vocabulary::from_parts(pieces, index, case_mode)
}

impl Vocabulary {
    pub fn new<I, S>(pieces: I, case_mode: CaseMode) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let text: String = pieces
            .into_iter()
            .map(|p| {
                let mut p: String = p.into();
                p.push('\n');
                p
            })
            .collect();
        load_vocab(text.as_bytes(), case_mode)
    }

    fn from_parts(pieces: Vec<String>, index: HashMap<String, u32>, case_mode: CaseMode) -> Result<Self> {
        let unknown_token = "[UNK]".to_string();
        if !index.contains_key(&unknown_token) {
            return Err(Error::Vocab(format!("missing unknown token {unknown_token}")));
        }
        Ok(Vocabulary {
            pieces,
            index,
            unknown_token,
            sequence_start: "[CLS]".into(),
            sequence_end: "[SEP]".into(),
            max_word_chars: 100,
            case_mode,
            split_punctuation: true,
        })
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn contains(&self, piece: &str) -> bool {
        self.index.contains_key(piece)
    }

    pub fn id(&self, piece: &str) -> Option<u32> {
        self.index.get(piece).copied()
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    /// Identifier written into bridge headers: `sha256:` followed by the
    /// first 16 hex digits of SHA-256 over every piece terminated by `\n`.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.pieces {
            hasher.update(p.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        format!("sha256:{hex}")
    }

    /// Drops control characters; in uncased mode also lowercases and strips accents.
    pub fn normalize(&self, word: &str) -> String {
        let kept = word.chars().filter(|c| !c.is_control());
        match self.case_mode {
            CaseMode::Cased => kept.collect(),
            CaseMode::Uncased => kept
                .flat_map(char::to_lowercase)
                .nfd()
                .filter(|c| !is_combining_mark(*c))
                .collect(),
        }
    }

    /// Pieces for one corpus word: normalization, optional punctuation
    /// split, then WordPiece on each part.
    pub fn tokenize_word(&self, word: &str) -> Vec<String> {
        let normalized = self.normalize(word);
        if normalized.is_empty() {
            return vec![self.unknown_token.clone()];
        }
        if !self.split_punctuation {
            return self.greedy(&normalized);
        }
        let mut pieces = Vec::new();
        let mut part_start = 0;
        for (i, c) in normalized.char_indices() {
            if is_punctuation(c) {
                if part_start < i {
                    pieces.extend(self.greedy(&normalized[part_start..i]));
                }
                pieces.extend(self.greedy(&normalized[i..i + c.len_utf8()]));
                part_start = i + c.len_utf8();
            }
        }
        if part_start < normalized.len() {
            pieces.extend(self.greedy(&normalized[part_start..]));
        }
        pieces
    }

    /// Greedy longest-match-first over an already normalized string.
    fn greedy(&self, word: &str) -> Vec<String> {
        let bounds: Vec<usize> = word
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(word.len()))
            .collect();
        let n_chars = bounds.len() - 1;
        if n_chars > self.max_word_chars {
            return vec![self.unknown_token.clone()];
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        let mut candidate = String::with_capacity(word.len() + 2);
        while start < n_chars {
            let mut found = None;
            for end in (start + 1..=n_chars).rev() {
                candidate.clear();
                if start > 0 {
                    candidate.push_str(CONTINUATION_PREFIX);
                }
                candidate.push_str(&word[bounds[start]..bounds[end]]);
                if self.index.contains_key(&candidate) {
                    found = Some(end);
                    break;
                }
            }
            match found {
                Some(end) => {
                    pieces.push(candidate.clone());
                    start = end;
                }
                None => return vec![self.unknown_token.clone()],
            }
        }
        pieces
    }
}

/// ASCII punctuation plus any other non-alphanumeric, non-space, non-control character.
fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_ascii() && !c.is_alphanumeric() && !c.is_whitespace() && !c.is_control())
}

/// WordPiece on a single whitespace-free word: normalize per the vocabulary's
/// case mode, then repeatedly take the longest vocabulary piece matching the
/// remaining characters (`##`-prefixed after the first). Any unmatched
/// position, or a word longer than `max_word_chars`, yields `[unknown]`.
pub fn wordpiece_tokenize(word: &str, vocab: &Vocabulary) -> Vec<String> {
    let normalized = vocab.normalize(word);
    if normalized.is_empty() {
        return vec![vocab.unknown_token.clone()];
    }
    vocab.greedy(&normalized)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Vocabulary {
        Vocabulary::new(["[UNK]", "un", "##aff", "##able"], CaseMode::Cased).unwrap()
    }

    #[test]
    fn loads() {
        let v = load_vocab("[UNK]\n[CLS]\n[SEP]\na\n##b\n".as_bytes(), CaseMode::Cased).unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v.id("##b"), Some(4));
        assert_eq!(toy().len(), 4);
        let err = load_vocab("[UNK]\nun\nun\n".as_bytes(), CaseMode::Cased).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(load_vocab("a\nb\n".as_bytes(), CaseMode::Cased).is_err());
    }

    #[test]
    fn greedy_longest_match() {
        assert_eq!(wordpiece_tokenize("unaffable", &toy()), ["un", "##aff", "##able"]);
        let v = Vocabulary::new(["[UNK]", "protocol", "pro"], CaseMode::Cased).unwrap();
        assert_eq!(wordpiece_tokenize("protocol", &v), ["protocol"]);
        assert_eq!(wordpiece_tokenize("unable", &toy()), ["un", "##able"]);
        assert_eq!(wordpiece_tokenize("unknown", &toy()), ["[UNK]"]);
        assert_eq!(wordpiece_tokenize("affable", &toy()), ["[UNK]"]);
    }

    #[test]
    fn ddh2o_fragments() {
        // Single characters only, as a base cased vocabulary would give.
        let v = Vocabulary::new(
            ["[UNK]", "d", "##d", "##H", "##2", "##O", "dd", "H2O"],
            CaseMode::Cased,
        )
        .unwrap();
        let pieces = wordpiece_tokenize("ddH2O", &v);
        // "dd" wins over "d" at the first step, then single characters.
        assert_eq!(pieces, ["dd", "##H", "##2", "##O"]);
        let v = Vocabulary::new(["[UNK]", "d", "##d", "##H", "##2", "##O"], CaseMode::Cased).unwrap();
        let stripped: Vec<String> = wordpiece_tokenize("ddH2O", &v)
            .iter()
            .map(|p| p.trim_start_matches(CONTINUATION_PREFIX).to_string())
            .collect();
        assert_eq!(stripped, ["d", "d", "H", "2", "O"]);
    }

    #[test]
    fn max_word_chars() {
        let mut v = Vocabulary::new(["[UNK]", "a", "##a"], CaseMode::Cased).unwrap();
        v.max_word_chars = 3;
        assert_eq!(wordpiece_tokenize("aaa", &v).len(), 3);
        assert_eq!(wordpiece_tokenize("aaaa", &v), ["[UNK]"]);
    }

    #[test]
    fn uncased_strips_accents() {
        let v = Vocabulary::new(["[UNK]", "cafe"], CaseMode::Uncased).unwrap();
        assert_eq!(wordpiece_tokenize("Café", &v), ["cafe"]);
        let cased = Vocabulary::new(["[UNK]", "cafe"], CaseMode::Cased).unwrap();
        assert_eq!(wordpiece_tokenize("Café", &cased), ["[UNK]"]);
    }

    #[test]
    fn control_only_word_is_unknown() {
        assert_eq!(wordpiece_tokenize("\u{7}", &toy()), ["[UNK]"]);
        assert_eq!(toy().tokenize_word("\u{7}\u{8}"), ["[UNK]"]);
    }

    #[test]
    fn punctuation_split() {
        let v = Vocabulary::new(
            ["[UNK]", "l", "##B", "##iot", "##in", "-", "16", "U", "##TP"],
            CaseMode::Cased,
        )
        .unwrap();
        assert_eq!(
            v.tokenize_word("lBiotin-16-UTP"),
            ["l", "##B", "##iot", "##in", "-", "16", "-", "U", "##TP"]
        );
        assert_eq!(wordpiece_tokenize("lBiotin-16-UTP", &v), ["[UNK]"]);
    }

    #[test]
    fn fingerprint_depends_on_content() {
        let a = toy().fingerprint();
        assert!(a.starts_with("sha256:") && a.len() == 7 + 16);
        let b = Vocabulary::new(["[UNK]", "un", "##aff"], CaseMode::Cased).unwrap();
        assert_ne!(a, b.fingerprint());
    }
}
