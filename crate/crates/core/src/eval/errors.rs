//! Categorization of the spans that exact matching leaves unexplained.
//!
//! After exact matches are removed, categories are assigned with fixed
//! precedence: type errors, then boundary errors, then fragmentation, then
//! spurious predictions and missed gold spans. Every false positive and false
//! negative ends up in exactly one [`SpanError`].

use std::fmt;

use super::{aligned_sentences, match_spans, MatchMode};
use crate::corpus::{Corpus, EntitySpan};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Identical extent, different type.
    Type,
    /// Same type, overlapping, different extent (one prediction, one gold).
    Boundary,
    /// One gold span covered by two or more same-type predictions.
    Fragmentation,
    /// Prediction with no remaining same-type gold; `overlaps_gold` when it
    /// still overlaps a gold span of another type or extent.
    Spurious { overlaps_gold: bool },
    /// Gold span with no remaining same-type prediction; `overlapped` when a
    /// prediction of another type or extent overlaps it.
    Missed { overlapped: bool },
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Type => "type-error",
            ErrorKind::Boundary => "boundary-error",
            ErrorKind::Fragmentation => "fragmentation",
            ErrorKind::Spurious { overlaps_gold: false } => "spurious",
            ErrorKind::Spurious { overlaps_gold: true } => "spurious-typed-overlap",
            ErrorKind::Missed { overlapped: false } => "missed",
            ErrorKind::Missed { overlapped: true } => "missed-typed-overlap",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanError {
    pub document: String,
    pub sentence: usize,
    pub kind: ErrorKind,
    pub gold: Vec<EntitySpan>,
    pub pred: Vec<EntitySpan>,
}

impl fmt::Display for SpanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |spans: &[EntitySpan]| {
            spans.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
        };
        write!(
            f,
            "{}\t{}\t{}\tgold={}\tpred={}",
            self.document,
            self.sentence,
            self.kind,
            list(&self.gold),
            list(&self.pred)
        )
    }
}

pub fn error_report(gold: &Corpus, pred: &Corpus) -> Result<Vec<SpanError>> {
    let pairs = aligned_sentences(gold, pred)?;
    let ids = gold
        .documents
        .iter()
        .flat_map(|d| (0..d.sentences.len()).map(move |i| (d.id.as_str(), i)));
    let mut out = Vec::new();
    for ((g, p), (doc, si)) in pairs.into_iter().zip(ids) {
        let gs = g.spans()?;
        let ps = p.spans()?;
        for (kind, gold, pred) in categorize(&gs, &ps) {
            out.push(SpanError {
                document: doc.to_string(),
                sentence: si,
                kind,
                gold,
                pred,
            });
        }
    }
    Ok(out)
}

type Category = (ErrorKind, Vec<EntitySpan>, Vec<EntitySpan>);

fn categorize(gold: &[EntitySpan], pred: &[EntitySpan]) -> Vec<Category> {
    let mut gold_left = vec![true; gold.len()];
    let mut pred_left = vec![true; pred.len()];
    for (p, m) in match_spans(gold, pred, MatchMode::Exact).into_iter().enumerate() {
        if let Some(g) = m {
            gold_left[g] = false;
            pred_left[p] = false;
        }
    }
    let mut out = Vec::new();

    for p in 0..pred.len() {
        if !pred_left[p] {
            continue;
        }
        if let Some(g) = (0..gold.len()).find(|&g| gold_left[g] && gold[g].same_extent(&pred[p])) {
            gold_left[g] = false;
            pred_left[p] = false;
            out.push((ErrorKind::Type, vec![gold[g].clone()], vec![pred[p].clone()]));
        }
    }

    let same_type_overlaps = |g: usize, pred_left: &[bool]| -> Vec<usize> {
        (0..pred.len())
            .filter(|&p| pred_left[p] && pred[p].label == gold[g].label && pred[p].overlaps(&gold[g]))
            .collect()
    };

    for p in 0..pred.len() {
        if !pred_left[p] {
            continue;
        }
        let candidate = (0..gold.len())
            .find(|&g| gold_left[g] && gold[g].label == pred[p].label && gold[g].overlaps(&pred[p]));
        if let Some(g) = candidate {
            if same_type_overlaps(g, &pred_left).len() == 1 {
                gold_left[g] = false;
                pred_left[p] = false;
                out.push((ErrorKind::Boundary, vec![gold[g].clone()], vec![pred[p].clone()]));
            }
        }
    }

    for g in 0..gold.len() {
        if !gold_left[g] {
            continue;
        }
        let parts = same_type_overlaps(g, &pred_left);
        if parts.len() >= 2 {
            gold_left[g] = false;
            for &p in &parts {
                pred_left[p] = false;
            }
            out.push((
                ErrorKind::Fragmentation,
                vec![gold[g].clone()],
                parts.iter().map(|&p| pred[p].clone()).collect(),
            ));
        }
    }

    for p in (0..pred.len()).filter(|&p| pred_left[p]) {
        let overlaps_gold = gold.iter().any(|g| g.overlaps(&pred[p]));
        out.push((ErrorKind::Spurious { overlaps_gold }, Vec::new(), vec![pred[p].clone()]));
    }
    for g in (0..gold.len()).filter(|&g| gold_left[g]) {
        let overlapped = pred.iter().any(|p| p.overlaps(&gold[g]));
        out.push((ErrorKind::Missed { overlapped }, vec![gold[g].clone()], Vec::new()));
    }
    out
}
