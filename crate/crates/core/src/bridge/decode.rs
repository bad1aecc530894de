use std::fmt;
use std::str::FromStr;

use super::{BridgeFile, BridgeHeader, LogitsRecord, SentenceScores, BRIDGE_VERSION};
use crate::corpus::{repair_bio, BioTag, Corpus, Document, LabelSet, RepairMode, Sentence};
use crate::crf::bio_masks;
use crate::crf::lattice::Potentials;
use crate::exec::Execution;
use crate::subword::{chunk_sentence, tokenize_sentence, AlignedSentence, Vocabulary};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DecodeMode {
    /// Per-word argmax followed by begin-mode repair.
    Argmax,
    /// Best tag sequence under hard BIO constraints.
    #[default]
    Constrained,
}

impl fmt::Display for DecodeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecodeMode::Argmax => "argmax",
            DecodeMode::Constrained => "constrained",
        })
    }
}

impl FromStr for DecodeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "argmax" => Ok(DecodeMode::Argmax),
            "constrained" => Ok(DecodeMode::Constrained),
            other => Err(Error::Config(format!(
                "unknown decode mode {other:?} (expected argmax or constrained)"
            ))),
        }
    }
}

fn check_alignment(records: &[LogitsRecord], aligned: &AlignedSentence) -> Result<()> {
    if records.len() != aligned.piece_count() {
        return Err(Error::Bridge(format!(
            "{} scored pieces for a sentence that tokenizes into {}",
            records.len(),
            aligned.piece_count()
        )));
    }
    for (p, r) in records.iter().enumerate() {
        if r.surface != aligned.pieces[p] || r.word_index != aligned.word_index[p] {
            return Err(Error::Bridge(format!(
                "document {:?}, sentence {}, piece {p}: file has {:?} of word {}, tokenizer gives {:?} of word {}",
                r.document, r.sentence, r.surface, r.word_index, aligned.pieces[p], aligned.word_index[p]
            )));
        }
    }
    Ok(())
}

/// Decodes one sentence's piece scores into word-level tags, reading each
/// word's scores from its first piece.
pub fn decode_scores(
    records: &[LogitsRecord],
    aligned: &AlignedSentence,
    alphabet: &[BioTag],
    mode: DecodeMode,
) -> Result<Vec<BioTag>> {
    check_alignment(records, aligned)?;
    let m = alphabet.len();
    let n = aligned.word_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let rows = aligned.first_piece_index.iter().map(|&p| &records[p].scores);
    match mode {
        DecodeMode::Argmax => {
            let raw: Vec<BioTag> = rows
                .map(|row| {
                    // lowest index wins ties
                    let best = row
                        .iter()
                        .enumerate()
                        .fold(0, |best, (i, &v)| if v > row[best] { i } else { best });
                    alphabet[best].clone()
                })
                .collect();
            Ok(repair_bio(&raw, RepairMode::Begin))
        }
        DecodeMode::Constrained => {
            let unary: Vec<f64> = rows.flat_map(|row| row.iter().copied()).collect();
            let (transition, start) = bio_masks(alphabet);
            let end = vec![0.0; m];
            let potentials = Potentials {
                labels: m,
                unary: &unary,
                transition: &transition,
                start: &start,
                end: &end,
            };
            let (path, _) = potentials.viterbi();
            Ok(path.into_iter().map(|y| alphabet[y].clone()).collect())
        }
    }
}

/// Tags every sentence of `corpus` from the bridge scores.
///
/// The bridge must have been produced with the same vocabulary, and every
/// non-empty sentence of the corpus must have records. Sentences in the
/// bridge that the corpus lacks are ignored with a warning.
pub fn predict_corpus(
    bridge: &BridgeFile,
    corpus: &Corpus,
    vocab: &Vocabulary,
    mode: DecodeMode,
    exec: Execution,
) -> Result<Corpus> {
    let fingerprint = vocab.fingerprint();
    if bridge.header.vocab != fingerprint {
        return Err(Error::Bridge(format!(
            "bridge was exported with vocabulary {} but the loaded vocabulary is {fingerprint}",
            bridge.header.vocab
        )));
    }
    let alphabet = &bridge.header.alphabet;
    let expected = corpus.label_set.alphabet();
    if alphabet != &expected {
        return Err(Error::Bridge(
            "bridge alphabet differs from the corpus label set".into(),
        ));
    }

    let mut jobs = Vec::new();
    let mut missing = Vec::new();
    for doc in &corpus.documents {
        for (s, sentence) in doc.sentences.iter().enumerate() {
            let group = bridge.get(&doc.id, s);
            if group.is_none() && !sentence.is_empty() {
                missing.push(format!("{}:{s}", doc.id));
            }
            jobs.push((sentence, group));
        }
    }
    if !missing.is_empty() {
        return Err(Error::Bridge(format!(
            "no scores for {} sentence(s): {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    let known = jobs.iter().filter(|(_, g)| g.is_some()).count();
    if known < bridge.sentences.len() {
        log::warn!(
            "{} scored sentence(s) in the bridge have no counterpart in the corpus",
            bridge.sentences.len() - known
        );
    }

    let budget = bridge.header.budget;
    let tags = exec.try_map(&jobs, |&(sentence, group)| -> Result<Vec<BioTag>> {
        let aligned = tokenize_sentence(sentence, vocab);
        chunk_sentence(&aligned, budget)?;
        let records = group.map(|g| g.records.as_slice()).unwrap_or(&[]);
        decode_scores(records, &aligned, alphabet, mode)
    })?;

    let mut tags = tags.into_iter();
    let documents = corpus
        .documents
        .iter()
        .map(|doc| Document {
            id: doc.id.clone(),
            sentences: doc
                .sentences
                .iter()
                .map(|s| Sentence {
                    tokens: s.tokens.clone(),
                    tags: tags.next(),
                })
                .collect(),
            source_text: doc.source_text.clone(),
        })
        .collect();
    Ok(Corpus {
        documents,
        label_set: corpus.label_set.clone(),
    })
}

/// Produces a bridge file the way an encoder-side exporter does: each
/// sentence is chunked under `budget`, `score` is called once per chunk
/// with the chunk's pieces, and the chunk records are written in order.
///
/// `score(document, sentence, aligned, pieces)` must return one score row
/// per piece in `pieces`.
pub fn export_scores<F>(
    corpus: &Corpus,
    vocab: &Vocabulary,
    label_set: &LabelSet,
    budget: usize,
    mut score: F,
) -> Result<BridgeFile>
where
    F: FnMut(&str, usize, &AlignedSentence, std::ops::Range<usize>) -> Vec<Vec<f64>>,
{
    let header = BridgeHeader {
        version: BRIDGE_VERSION,
        alphabet: label_set.alphabet(),
        vocab: vocab.fingerprint(),
        budget,
    };
    let mut groups = Vec::new();
    for doc in &corpus.documents {
        for (s, sentence) in doc.sentences.iter().enumerate() {
            if sentence.is_empty() {
                continue;
            }
            let aligned = tokenize_sentence(sentence, vocab);
            let plan = chunk_sentence(&aligned, budget)?;
            let mut records = Vec::with_capacity(aligned.piece_count());
            for range in plan.piece_ranges(&aligned) {
                let rows = score(&doc.id, s, &aligned, range.clone());
                if rows.len() != range.len() {
                    return Err(Error::Bridge(format!(
                        "scorer returned {} rows for {} pieces",
                        rows.len(),
                        range.len()
                    )));
                }
                for (p, scores) in range.zip(rows) {
                    records.push(LogitsRecord {
                        document: doc.id.clone(),
                        sentence: s,
                        piece: p,
                        surface: aligned.pieces[p].clone(),
                        word_index: aligned.word_index[p],
                        scores,
                    });
                }
            }
            groups.push(SentenceScores {
                document: doc.id.clone(),
                sentence: s,
                records,
            });
        }
    }
    BridgeFile::new(header, groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subword::CaseMode;

    fn tags(s: &str) -> Vec<BioTag> {
        s.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    fn setup() -> (Vocabulary, AlignedSentence, Vec<BioTag>) {
        let vocab = Vocabulary::new(
            ["[UNK]", "add", "sds", "##s", "now", "to", "tube"].map(String::from),
            CaseMode::Cased,
        )
        .unwrap();
        let sentence = Sentence::untagged(["add", "sdss", "to", "tube"]);
        let aligned = tokenize_sentence(&sentence, &vocab);
        (vocab, aligned, tags("O B-X I-X"))
    }

    fn records(aligned: &AlignedSentence, rows: &[[f64; 3]]) -> Vec<LogitsRecord> {
        aligned
            .pieces
            .iter()
            .enumerate()
            .map(|(p, s)| LogitsRecord {
                document: "d".into(),
                sentence: 0,
                piece: p,
                surface: s.clone(),
                word_index: aligned.word_index[p],
                scores: rows[p].to_vec(),
            })
            .collect()
    }

    #[test]
    fn first_piece_decides() {
        let (_, aligned, alphabet) = setup();
        assert_eq!(aligned.pieces, ["add", "sds", "##s", "to", "tube"]);
        // the continuation piece of "sdss" votes O but is ignored
        let rows = [[0., 1., 0.], [0., 2., 0.], [9., 0., 0.], [0., 0., 3.], [5., 0., 0.]];
        let rec = records(&aligned, &rows);
        let argmax = decode_scores(&rec, &aligned, &alphabet, DecodeMode::Argmax).unwrap();
        assert_eq!(argmax, tags("B-X B-X I-X O"));
        let viterbi = decode_scores(&rec, &aligned, &alphabet, DecodeMode::Constrained).unwrap();
        assert_eq!(viterbi, tags("B-X B-X I-X O"));
    }

    #[test]
    fn argmax_repairs_and_constrained_respects() {
        let (_, aligned, alphabet) = setup();
        let rows = [[0., 0., 1.], [0., 0., 0.], [0., 0., 0.], [1., 0., 0.], [1., 0., 0.]];
        let rec = records(&aligned, &rows);
        // leading I-X becomes B-X; the tie at "sdss" goes to O, the lowest index
        let argmax = decode_scores(&rec, &aligned, &alphabet, DecodeMode::Argmax).unwrap();
        assert_eq!(argmax, tags("B-X O O O"));
        let viterbi = decode_scores(&rec, &aligned, &alphabet, DecodeMode::Constrained).unwrap();
        assert!(crate::corpus::validate_bio(&viterbi).is_empty());
    }

    #[test]
    fn uniform_scores_decode_to_outside() {
        let (_, aligned, alphabet) = setup();
        let rec = records(&aligned, &[[0.25; 3]; 5]);
        for mode in [DecodeMode::Argmax, DecodeMode::Constrained] {
            assert_eq!(decode_scores(&rec, &aligned, &alphabet, mode).unwrap(), tags("O O O O"));
        }
    }

    #[test]
    fn surface_mismatch_is_reported() {
        let (_, aligned, alphabet) = setup();
        let mut rec = records(&aligned, &[[0.0; 3]; 5]);
        rec[2].surface = "##x".into();
        let err = decode_scores(&rec, &aligned, &alphabet, DecodeMode::Argmax).unwrap_err();
        assert!(err.to_string().contains("##x"));
        rec.pop();
        assert!(decode_scores(&rec, &aligned, &alphabet, DecodeMode::Argmax).is_err());
    }
}
