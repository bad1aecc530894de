//! Span-level scoring: exact and partial matching, error categories, and
//! inter-annotator agreement.

mod errors;
mod kappa;
mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::corpus::{Corpus, EntitySpan, Sentence};
use crate::exec::Execution;
use crate::{Error, Result};

pub use errors::{error_report, ErrorKind, SpanError};
pub use kappa::{cohen_kappa, kappa_from_pairs, AgreementReport, NONE_CATEGORY};
pub use report::{render_key_values, render_table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MatchMode {
    /// Identical boundaries and type.
    Exact,
    /// Same type and at least one shared word.
    Partial,
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchMode::Exact => "exact",
            MatchMode::Partial => "partial",
        })
    }
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "complete" => Ok(MatchMode::Exact),
            "partial" => Ok(MatchMode::Partial),
            _ => Err(Error::Config(format!("unknown match mode {s:?}"))),
        }
    }
}

/// Match counts with derived precision, recall and F1 (`0/0` taken as 0).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Scores {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl Scores {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp as f64, (tp + fp) as f64);
        let recall = ratio(tp as f64, (tp + fn_) as f64);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        Scores {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }

    fn add(&mut self, tp: usize, fp: usize, fn_: usize) {
        *self = Scores::from_counts(self.tp + tp, self.fp + fp, self.fn_ + fn_);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub mode: MatchMode,
    /// Keyed by entity type.
    pub per_type: BTreeMap<String, Scores>,
    pub micro: Scores,
}

/// Pairs up sentences of two corpora that must share documents, sentences
/// and tokens.
pub(crate) fn aligned_sentences<'a>(
    gold: &'a Corpus,
    pred: &'a Corpus,
) -> Result<Vec<(&'a Sentence, &'a Sentence)>> {
    if gold.documents.len() != pred.documents.len() {
        return Err(Error::Misaligned(format!(
            "{} documents vs {}",
            gold.documents.len(),
            pred.documents.len()
        )));
    }
    let mut pairs = Vec::new();
    for (g, p) in gold.documents.iter().zip(&pred.documents) {
        if g.sentences.len() != p.sentences.len() {
            return Err(Error::Misaligned(format!(
                "document {:?}: {} sentences vs {}",
                g.id,
                g.sentences.len(),
                p.sentences.len()
            )));
        }
        for (i, (gs, ps)) in g.sentences.iter().zip(&p.sentences).enumerate() {
            if gs.len() != ps.len() || gs.words().ne(ps.words()) {
                return Err(Error::Misaligned(format!(
                    "document {:?}, sentence {i}: tokens differ",
                    g.id
                )));
            }
            pairs.push((gs, ps));
        }
    }
    Ok(pairs)
}

/// One-to-one greedy matching: predictions left to right, each taking the
/// leftmost unmatched eligible gold span. Returns the gold index per prediction.
pub fn match_spans(gold: &[EntitySpan], pred: &[EntitySpan], mode: MatchMode) -> Vec<Option<usize>> {
    let mut used = vec![false; gold.len()];
    pred.iter()
        .map(|p| {
            let hit = gold.iter().enumerate().position(|(k, g)| {
                !used[k]
                    && g.label == p.label
                    && match mode {
                        MatchMode::Exact => g.same_extent(p),
                        MatchMode::Partial => g.overlaps(p),
                    }
            });
            if let Some(k) = hit {
                used[k] = true;
            }
            hit
        })
        .collect()
}

/// Scores `pred` against `gold`. Both must be token-aligned and BIO-valid;
/// apply [`crate::corpus::repair_bio`] to raw predictions first.
pub fn evaluate(gold: &Corpus, pred: &Corpus, mode: MatchMode) -> Result<EvalReport> {
    let pairs = aligned_sentences(gold, pred)?;
    let per_sentence = Execution::Parallel.try_map(&pairs, |(g, p)| -> Result<_> {
        let gs = g.spans()?;
        let ps = p.spans()?;
        let matches = match_spans(&gs, &ps, mode);
        Ok((gs, ps, matches))
    })?;

    let mut per_type: BTreeMap<String, Scores> = BTreeMap::new();
    for t in gold.label_set.types().iter().chain(pred.label_set.types()) {
        per_type.entry(t.clone()).or_default();
    }
    let mut micro = Scores::default();
    for (gs, ps, matches) in &per_sentence {
        let mut gold_hit = vec![false; gs.len()];
        for (p, m) in ps.iter().zip(matches) {
            let entry = per_type.entry(p.label.clone()).or_default();
            match m {
                Some(k) => {
                    gold_hit[*k] = true;
                    entry.add(1, 0, 0);
                    micro.add(1, 0, 0);
                }
                None => {
                    entry.add(0, 1, 0);
                    micro.add(0, 1, 0);
                }
            }
        }
        for (g, hit) in gs.iter().zip(gold_hit) {
            if !hit {
                per_type.entry(g.label.clone()).or_default().add(0, 0, 1);
                micro.add(0, 0, 1);
            }
        }
    }
    Ok(EvalReport {
        mode,
        per_type,
        micro,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BioTag, Document};

    fn corpus(tags: &[&str]) -> Corpus {
        let words = ["standard", "T4", "DNA", "Ligase", "x", "y"];
        Corpus::from_documents(vec![Document::new(
            "d",
            vec![Sentence::tagged(
                tags.iter()
                    .zip(words)
                    .map(|(t, w)| (w, t.parse::<BioTag>().unwrap())),
            )],
        )])
    }

    #[test]
    fn split_reagent_phrase_scores() {
        let gold = corpus(&["B-Reagent", "I-Reagent", "I-Reagent", "I-Reagent"]);
        let pred = corpus(&["B-Reagent", "B-Device", "B-Reagent", "I-Reagent"]);
        let exact = evaluate(&gold, &pred, MatchMode::Exact).unwrap().micro;
        assert_eq!((exact.tp, exact.fp, exact.fn_), (0, 3, 1));
        assert_eq!((exact.precision, exact.recall, exact.f1), (0.0, 0.0, 0.0));
        let partial = evaluate(&gold, &pred, MatchMode::Partial).unwrap().micro;
        assert_eq!((partial.tp, partial.fp, partial.fn_), (1, 2, 0));
        assert_eq!(partial.precision, 1.0 / 3.0);
        assert_eq!(partial.recall, 1.0);
        assert_eq!(partial.f1, 0.5);
    }

    #[test]
    fn perfect_and_empty_predictions() {
        let gold = corpus(&["B-Reagent", "I-Reagent", "O", "B-Device"]);
        for mode in [MatchMode::Exact, MatchMode::Partial] {
            let r = evaluate(&gold, &gold, mode).unwrap();
            assert_eq!((r.micro.precision, r.micro.recall, r.micro.f1), (1.0, 1.0, 1.0));
        }
        let none = corpus(&["O", "O", "O", "O"]);
        let r = evaluate(&gold, &none, MatchMode::Exact).unwrap().micro;
        assert_eq!((r.tp, r.fp, r.fn_), (0, 0, 2));
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        let per = &evaluate(&gold, &none, MatchMode::Exact).unwrap().per_type;
        assert_eq!(per["Device"].fn_, 1);
    }

    #[test]
    fn partial_matching_is_one_to_one() {
        let gold = corpus(&["B-X", "I-X", "I-X", "I-X"]);
        let pred = corpus(&["B-X", "B-X", "B-X", "O"]);
        let r = evaluate(&gold, &pred, MatchMode::Partial).unwrap().micro;
        assert_eq!((r.tp, r.fp, r.fn_), (1, 2, 0));
    }

    #[test]
    fn misalignment_is_reported() {
        let gold = corpus(&["O", "O", "O"]);
        let pred = corpus(&["O", "O"]);
        let err = evaluate(&gold, &pred, MatchMode::Exact).unwrap_err();
        assert!(matches!(err, Error::Misaligned(_)), "{err}");
    }

    #[test]
    fn invalid_predictions_are_rejected() {
        let gold = corpus(&["O", "O"]);
        let pred = corpus(&["O", "I-X"]);
        assert!(evaluate(&gold, &pred, MatchMode::Exact).is_err());
    }
}
