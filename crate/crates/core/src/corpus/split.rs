use super::Corpus;
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Partitions the corpus by document.
///
/// Documents are shuffled with [`SplitMix64`] seeded by `seed`, then cut into
/// consecutive parts of `floor(ratio * N)` documents; leftover documents go
/// one each to the earliest parts.
pub fn split_dataset(corpus: &Corpus, ratios: &[f64], seed: u64) -> Result<Vec<Corpus>> {
    if ratios.is_empty() {
        return Err(Error::Split("no ratios given".into()));
    }
    if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::Split(format!("ratio {r} is not positive")));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Split(format!("ratios sum to {total}, expected 1")));
    }
    let n = corpus.documents.len();
    if ratios.len() > n {
        return Err(Error::Split(format!(
            "{} splits requested for {n} documents",
            ratios.len()
        )));
    }

    // The epsilon keeps products like 0.7 * 10 from flooring to 6.
    let mut sizes: Vec<usize> = ratios
        .iter()
        .map(|r| (r * n as f64 + 1e-9).floor() as usize)
        .collect();
    let assigned: usize = sizes.iter().sum();
    for size in sizes.iter_mut().take(n - assigned) {
        *size += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut order);

    let mut parts = Vec::with_capacity(sizes.len());
    let mut cursor = 0;
    for size in sizes {
        let documents = order[cursor..cursor + size]
            .iter()
            .map(|&i| corpus.documents[i].clone())
            .collect();
        cursor += size;
        parts.push(Corpus {
            documents,
            label_set: corpus.label_set.clone(),
        });
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Sentence};

    fn corpus(n: usize) -> Corpus {
        Corpus::from_documents(
            (0..n)
                .map(|i| Document::new(format!("d{i}"), vec![Sentence::untagged(["w"])]))
                .collect(),
        )
    }

    fn sizes(parts: &[Corpus]) -> Vec<usize> {
        parts.iter().map(|c| c.documents.len()).collect()
    }

    #[test]
    fn eighty_ten_ten_ratios() {
        let c = corpus(10);
        assert_eq!(sizes(&split_dataset(&c, &[0.7, 0.3], 7).unwrap()), [7, 3]);
        assert_eq!(sizes(&split_dataset(&c, &[0.6, 0.2, 0.2], 7).unwrap()), [6, 2, 2]);
    }

    #[test]
    fn remainder_goes_to_earlier_splits() {
        let c = corpus(11);
        assert_eq!(sizes(&split_dataset(&c, &[0.6, 0.2, 0.2], 1).unwrap()), [7, 2, 2]);
        let c = corpus(7);
        assert_eq!(sizes(&split_dataset(&c, &[0.25, 0.25, 0.25, 0.25], 1).unwrap()), [2, 2, 2, 1]);
    }

    #[test]
    fn deterministic_disjoint_exhaustive() {
        let c = corpus(25);
        let a = split_dataset(&c, &[0.6, 0.2, 0.2], 42).unwrap();
        let b = split_dataset(&c, &[0.6, 0.2, 0.2], 42).unwrap();
        assert_eq!(a, b);
        let mut ids: Vec<String> = a
            .iter()
            .flat_map(|p| p.documents.iter().map(|d| d.id.clone()))
            .collect();
        ids.sort();
        let mut expected: Vec<String> = (0..25).map(|i| format!("d{i}")).collect();
        expected.sort();
        assert_eq!(ids, expected);
        let other = split_dataset(&c, &[0.6, 0.2, 0.2], 43).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn rejects_bad_input() {
        let c = corpus(2);
        assert!(split_dataset(&c, &[0.4, 0.3, 0.3], 0).is_err());
        assert!(split_dataset(&c, &[0.5, 0.6], 0).is_err());
        assert!(split_dataset(&c, &[1.5, -0.5], 0).is_err());
        assert!(split_dataset(&c, &[], 0).is_err());
    }
}
