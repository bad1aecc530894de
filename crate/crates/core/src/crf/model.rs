use std::collections::HashMap;

use super::features::{FeatureExtractor, FeatureTemplate, Gazetteer};
use super::lattice::{Marginals, Potentials};
use crate::corpus::{BioTag, Sentence};
use crate::exec::Execution;

/// Sparse binary-or-real feature activations at one position.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureVector {
    /// `(feature id, value)` pairs with distinct ids.
    pub entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn from_ids(ids: impl IntoIterator<Item = u32>) -> Self {
        let mut ids: Vec<u32> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        FeatureVector {
            entries: ids.into_iter().map(|i| (i, 1.0)).collect(),
        }
    }
}

/// Feature name to id mapping, fixed after training-set construction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FeatureDictionary {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl FeatureDictionary {
    pub fn from_names(names: Vec<String>) -> Self {
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        FeatureDictionary { names, index }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub(crate) fn insert(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    /// Ids of known names; unknown names are dropped.
    pub fn vectorize(&self, names: &[String]) -> FeatureVector {
        FeatureVector::from_ids(names.iter().filter_map(|n| self.get(n)))
    }
}

/// A linear-chain CRF over a BIO tag alphabet.
///
/// All parameters live in one flat vector laid out as
/// `[emission (features x labels) | transition (labels x labels) | start | end]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrfModel {
    pub(crate) labels: Vec<BioTag>,
    pub(crate) features: FeatureDictionary,
    pub(crate) templates: Vec<FeatureTemplate>,
    pub(crate) gazetteers: Vec<Gazetteer>,
    pub(crate) l2: f64,
    pub(crate) weights: Vec<f64>,
}

pub(crate) fn parameter_count(features: usize, labels: usize) -> usize {
    features * labels + labels * labels + 2 * labels
}

impl CrfModel {
    /// A zero-weight model.
    pub fn new(
        labels: Vec<BioTag>,
        features: FeatureDictionary,
        templates: Vec<FeatureTemplate>,
        gazetteers: Vec<Gazetteer>,
        l2: f64,
    ) -> Self {
        let weights = vec![0.0; parameter_count(features.len(), labels.len())];
        CrfModel {
            labels,
            features,
            templates,
            gazetteers,
            l2,
            weights,
        }
    }

    /// A model with anonymous features `f0..f{n}`; mostly for numeric tests.
    pub fn with_feature_count(labels: Vec<BioTag>, features: usize, l2: f64) -> Self {
        let names = (0..features).map(|i| format!("f{i}")).collect();
        CrfModel::new(labels, FeatureDictionary::from_names(names), Vec::new(), Vec::new(), l2)
    }

    pub fn labels(&self) -> &[BioTag] {
        &self.labels
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &FeatureDictionary {
        &self.features
    }

    pub fn templates(&self) -> &[FeatureTemplate] {
        &self.templates
    }

    pub fn gazetteers(&self) -> &[Gazetteer] {
        &self.gazetteers
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn label_index(&self, tag: &BioTag) -> Option<usize> {
        self.labels.iter().position(|t| t == tag)
    }

    pub(crate) fn emission_len(&self) -> usize {
        self.features.len() * self.labels.len()
    }

    pub fn emission(&self, feature: u32, label: usize) -> f64 {
        self.weights[feature as usize * self.labels.len() + label]
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.weights[self.emission_len() + from * self.labels.len() + to]
    }

    pub(crate) fn transition_block(&self) -> &[f64] {
        let m = self.labels.len();
        let off = self.emission_len();
        &self.weights[off..off + m * m]
    }

    pub(crate) fn start_block(&self) -> &[f64] {
        let m = self.labels.len();
        let off = self.emission_len() + m * m;
        &self.weights[off..off + m]
    }

    pub(crate) fn end_block(&self) -> &[f64] {
        let m = self.labels.len();
        let off = self.emission_len() + m * m + m;
        &self.weights[off..off + m]
    }

    /// Row-major `n x m` emission scores.
    pub fn unary_scores(&self, features: &[FeatureVector]) -> Vec<f64> {
        unary_scores(&self.weights, self.labels.len(), 1.0, features)
    }

    /// Feature vectors of a sentence under this model's templates and dictionary.
    pub fn featurize(&self, sentence: &Sentence) -> Vec<FeatureVector> {
        FeatureExtractor::new(&self.templates, &self.gazetteers)
            .extract_all(sentence)
            .iter()
            .map(|names| self.features.vectorize(names))
            .collect()
    }

    /// Unnormalized log-score of a label-index path.
    pub fn score_sequence(&self, features: &[FeatureVector], tags: &[usize]) -> f64 {
        let unary = self.unary_scores(features);
        self.potentials(&unary).score(tags)
    }

    pub fn log_partition(&self, features: &[FeatureVector]) -> f64 {
        let unary = self.unary_scores(features);
        self.potentials(&unary).log_partition()
    }

    pub fn marginals(&self, features: &[FeatureVector]) -> Marginals {
        let unary = self.unary_scores(features);
        self.potentials(&unary).marginals().0
    }

    /// Best label path and its unnormalized score. With `constrained`, paths
    /// that are not BIO-valid get `-inf`.
    pub fn viterbi(&self, features: &[FeatureVector], constrained: bool) -> (Vec<usize>, f64) {
        if features.is_empty() {
            return (Vec::new(), 0.0);
        }
        let unary = self.unary_scores(features);
        if constrained {
            let (transition, start) = self.constrained_blocks();
            Potentials {
                labels: self.labels.len(),
                unary: &unary,
                transition: &transition,
                start: &start,
                end: self.end_block(),
            }
            .viterbi()
        } else {
            self.potentials(&unary).viterbi()
        }
    }

    pub(crate) fn potentials<'a>(&'a self, unary: &'a [f64]) -> Potentials<'a> {
        Potentials {
            labels: self.labels.len(),
            unary,
            transition: self.transition_block(),
            start: self.start_block(),
            end: self.end_block(),
        }
    }

    pub(crate) fn constrained_blocks(&self) -> (Vec<f64>, Vec<f64>) {
        let (mask_t, mask_s) = bio_masks(&self.labels);
        let transition = self
            .transition_block()
            .iter()
            .zip(&mask_t)
            .map(|(w, m)| w + m)
            .collect();
        let start = self.start_block().iter().zip(&mask_s).map(|(w, m)| w + m).collect();
        (transition, start)
    }

    /// Viterbi tags for one sentence.
    pub fn tag_sentence(&self, sentence: &Sentence, constrained: bool) -> Vec<BioTag> {
        let features = self.featurize(sentence);
        let (path, _) = self.viterbi(&features, constrained);
        path.into_iter().map(|y| self.labels[y].clone()).collect()
    }

    /// Tags many sentences; output order follows input order.
    pub fn tag_sentences(&self, sentences: &[&Sentence], constrained: bool, exec: Execution) -> Vec<Vec<BioTag>> {
        exec.map(sentences, |s| self.tag_sentence(s, constrained))
    }
}

/// Additive masks: `0` for BIO-valid transitions/starts, `-inf` otherwise.
/// `I-X` may only follow `B-X` or `I-X` and may not start a sentence.
pub fn bio_masks(labels: &[BioTag]) -> (Vec<f64>, Vec<f64>) {
    let m = labels.len();
    let mut transition = vec![0.0; m * m];
    let mut start = vec![0.0; m];
    for (to, tag) in labels.iter().enumerate() {
        if !tag.may_follow(None) {
            start[to] = f64::NEG_INFINITY;
        }
        for (from, prev) in labels.iter().enumerate() {
            if !tag.may_follow(Some(prev)) {
                transition[from * m + to] = f64::NEG_INFINITY;
            }
        }
    }
    (transition, start)
}

/// `scale * sum(value * W[f, y])` for each position and label.
pub(crate) fn unary_scores(weights: &[f64], m: usize, scale: f64, features: &[FeatureVector]) -> Vec<f64> {
    let mut unary = vec![0.0; features.len() * m];
    for (i, fv) in features.iter().enumerate() {
        let row = &mut unary[i * m..(i + 1) * m];
        for &(f, v) in &fv.entries {
            let w = &weights[f as usize * m..(f as usize + 1) * m];
            for (r, wy) in row.iter_mut().zip(w) {
                *r += v * wy;
            }
        }
        if scale != 1.0 {
            row.iter_mut().for_each(|r| *r *= scale);
        }
    }
    unary
}
