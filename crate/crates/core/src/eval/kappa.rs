//! Span-level Cohen's kappa.
//!
//! Units are built per sentence from the union of both annotators' spans:
//! overlapping spans (from either side) merge into one unit. Each annotator
//! assigns a unit the type of its longest span inside it (leftmost on ties),
//! or [`NONE_CATEGORY`] when it has none.

use std::collections::BTreeMap;

use super::aligned_sentences;
use crate::corpus::{Corpus, EntitySpan};
use crate::Result;

pub const NONE_CATEGORY: &str = "NONE";

#[derive(Clone, Debug, PartialEq)]
pub struct AgreementReport {
    pub kappa: f64,
    pub observed: f64,
    pub expected: f64,
    pub units: usize,
}

pub fn cohen_kappa(a: &Corpus, b: &Corpus) -> Result<AgreementReport> {
    let mut pairs = Vec::new();
    for (sa, sb) in aligned_sentences(a, b)? {
        let spans_a = sa.spans()?;
        let spans_b = sb.spans()?;
        for (start, end) in units(&spans_a, &spans_b) {
            pairs.push((category(&spans_a, start, end), category(&spans_b, start, end)));
        }
    }
    Ok(kappa_from_pairs(&pairs))
}

fn units(a: &[EntitySpan], b: &[EntitySpan]) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = a.iter().chain(b).map(|s| (s.start, s.end)).collect();
    all.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (s, e) in all {
        match merged.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    merged
}

fn category(spans: &[EntitySpan], start: usize, end: usize) -> String {
    spans
        .iter()
        .filter(|s| s.start >= start && s.end <= end)
        .fold(None::<&EntitySpan>, |best, s| match best {
            Some(b) if b.len() >= s.len() => Some(b),
            _ => Some(s),
        })
        .map_or_else(|| NONE_CATEGORY.to_string(), |s| s.label.clone())
}

/// Kappa over paired category judgements. Perfect observed agreement yields
/// `kappa = 1` even when chance agreement is also 1 (a single category, or no units).
pub fn kappa_from_pairs<S: AsRef<str>>(pairs: &[(S, S)]) -> AgreementReport {
    let units = pairs.len();
    if units == 0 {
        return AgreementReport {
            kappa: 1.0,
            observed: 1.0,
            expected: 1.0,
            units,
        };
    }
    let n = units as f64;
    let mut agree = 0usize;
    let mut marg: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (x, y) in pairs {
        let (x, y) = (x.as_ref(), y.as_ref());
        if x == y {
            agree += 1;
        }
        marg.entry(x).or_default().0 += 1;
        marg.entry(y).or_default().1 += 1;
    }
    let observed = agree as f64 / n;
    let expected: f64 = marg
        .values()
        .map(|&(ca, cb)| (ca as f64 / n) * (cb as f64 / n))
        .sum();
    let kappa = if agree == units {
        1.0
    } else {
        (observed - expected) / (1.0 - expected)
    };
    AgreementReport {
        kappa,
        observed,
        expected,
        units,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{bio_encode, Document, Sentence};

    fn corpus(n: usize, spans: &[EntitySpan]) -> Corpus {
        let tags = bio_encode(spans, n).unwrap();
        Corpus::from_documents(vec![Document::new(
            "d",
            vec![Sentence::tagged((0..n).map(|i| format!("w{i}")).zip(tags))],
        )])
    }

    #[test]
    fn identical_annotations() {
        let c = corpus(6, &[EntitySpan::new(0, 1, "X"), EntitySpan::new(3, 3, "Y")]);
        let r = cohen_kappa(&c, &c).unwrap();
        assert_eq!((r.kappa, r.units), (1.0, 2));
        let single = corpus(3, &[EntitySpan::new(0, 0, "X")]);
        assert_eq!(cohen_kappa(&single, &single).unwrap().kappa, 1.0);
    }

    #[test]
    fn anti_correlated() {
        let pairs = [("X", "Y"), ("Y", "X"), ("X", "Y"), ("Y", "X")];
        let r = kappa_from_pairs(&pairs);
        assert_eq!((r.observed, r.expected, r.kappa), (0.0, 0.5, -1.0));
    }

    #[test]
    fn eight_of_ten() {
        // Units at even positions; B swaps the types of units 4 and 5.
        let a_types = ["X", "X", "X", "X", "X", "Y", "Y", "Y", "Y", "Y"];
        let mut b_types = a_types;
        b_types.swap(4, 5);
        let spans = |types: &[&str]| -> Vec<EntitySpan> {
            types.iter().enumerate().map(|(i, t)| EntitySpan::new(2 * i, 2 * i, *t)).collect()
        };
        let a = corpus(20, &spans(&a_types));
        let b = corpus(20, &spans(&b_types));
        let r = cohen_kappa(&a, &b).unwrap();
        assert_eq!(r.units, 10);
        assert!((r.observed - 0.8).abs() < 1e-12);
        assert!((r.expected - 0.5).abs() < 1e-12);
        assert!((r.kappa - 0.6).abs() < 1e-12);
    }

    #[test]
    fn overlapping_spans_merge_into_one_unit() {
        let a = corpus(6, &[EntitySpan::new(0, 2, "X")]);
        let b = corpus(6, &[EntitySpan::new(0, 0, "Y"), EntitySpan::new(1, 2, "X"), EntitySpan::new(4, 4, "X")]);
        let r = cohen_kappa(&a, &b).unwrap();
        assert_eq!(r.units, 2);
        // Unit 0..2: A=X, B=X (longest); unit 4: A=NONE, B=X.
        assert_eq!(r.observed, 0.5);
    }
}
