use std::collections::BTreeSet;

use log::{info, warn};

use super::features::{FeatureExtractor, FeatureTemplate, Gazetteer};
use super::lbfgs::{self, LbfgsParams, Termination};
use super::model::{CrfModel, FeatureDictionary};
use super::objective::{objective, sparse_gradient, Instance, Layout};
use crate::corpus::{BioTag, Corpus, Document, LabelSet, Sentence};
use crate::eval::{evaluate, MatchMode};
use crate::exec::Execution;
use crate::rng::SplitMix64;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Optimizer {
    #[default]
    Lbfgs,
    Sgd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    /// Initial SGD step size; decays as `lr / (1 + t / batches_per_epoch)`.
    pub learning_rate: f64,
    /// SGD epochs, or L-BFGS iterations.
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    /// Stop after this many epochs without a dev F1 improvement.
    pub patience: usize,
    /// Seeds the SGD shuffle.
    pub seed: u64,
    /// Decode dev sentences with BIO constraints when measuring F1.
    pub constrained: bool,
    pub execution: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Optimizer::Lbfgs,
            learning_rate: 0.1,
            epochs: 200,
            batch_size: 16,
            l2: 1.0,
            patience: 20,
            seed: 0,
            constrained: true,
            execution: Execution::Parallel,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if self.patience == 0 {
            return bad("patience must be positive");
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return bad("l2 strength must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Regularized training objective after the epoch.
    pub nll: f64,
    /// Exact-match micro F1 on the dev corpus, when one was given.
    pub dev_f1: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    /// Epoch whose weights were kept (the best dev F1, or the last epoch).
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

/// Featurizes and label-indexes every tagged sentence of `corpus`.
pub fn featurize_corpus(model: &CrfModel, corpus: &Corpus, exec: Execution) -> Result<Vec<Instance>> {
    let sentences: Vec<(&Document, usize, &Sentence)> = corpus
        .documents
        .iter()
        .flat_map(|d| d.sentences.iter().enumerate().map(move |(i, s)| (d, i, s)))
        .collect();
    exec.try_map(&sentences, |&(doc, si, s)| {
        let tags = gold_tags(doc, si, s)?;
        let gold = tags
            .iter()
            .map(|t| {
                model
                    .label_index(t)
                    .ok_or_else(|| Error::Train(format!("tag {t} not in the model alphabet")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Instance {
            features: model.featurize(s),
            gold,
        })
    })
}

fn gold_tags<'a>(doc: &Document, si: usize, s: &'a Sentence) -> Result<&'a [BioTag]> {
    let tags = s.tags.as_deref().ok_or_else(|| Error::Untagged {
        document: doc.id.clone(),
        sentence: si,
    })?;
    if let Some(v) = crate::corpus::validate_bio(tags).first() {
        return Err(Error::Train(format!(
            "document {:?}, sentence {si}: gold tags not BIO-valid at position {}",
            doc.id, v.position
        )));
    }
    Ok(tags)
}

/// Trains a CRF on `corpus`, using `dev` (possibly empty) for early stopping.
pub fn train(
    corpus: &Corpus,
    dev: &Corpus,
    templates: &[FeatureTemplate],
    gazetteers: &[Gazetteer],
    config: &TrainConfig,
) -> Result<(CrfModel, TrainLog)> {
    config.validate()?;
    if corpus.sentence_count() == 0 {
        return Err(Error::Train("training corpus has no sentences".into()));
    }
    let exec = config.execution;

    let mut label_set = corpus.label_set.clone();
    label_set.extend_with(&LabelSet::infer(&corpus.documents));
    let dev_types = LabelSet::infer(&dev.documents);
    for t in dev_types.types() {
        if !label_set.contains_type(t) {
            warn!("entity type {t:?} occurs in dev data but not in training data; it will never be predicted");
        }
    }

    let extractor = FeatureExtractor::new(templates, gazetteers);
    let sentences: Vec<&Sentence> = corpus.sentences().collect();
    let names = exec.map(&sentences, |s| extractor.extract_all(s));
    let mut dictionary = FeatureDictionary::default();
    for name in names.iter().flatten().flatten() {
        dictionary.insert(name);
    }
    info!(
        "training on {} sentences, {} features, {} labels",
        sentences.len(),
        dictionary.len(),
        label_set.tag_count()
    );

    let mut model = CrfModel::new(
        label_set.alphabet(),
        dictionary,
        templates.to_vec(),
        gazetteers.to_vec(),
        config.l2,
    );
    let instances = featurize_corpus(&model, corpus, exec)?;
    let mut log = TrainLog::default();
    if config.epochs == 0 {
        return Ok((model, log));
    }

    let dev_input = dev.without_tags();
    let mut stopper = EarlyStop::new(config.patience);
    let layout = Layout::of(&model);
    let dev_score = |model: &CrfModel| -> Result<Option<f64>> {
        if dev.sentence_count() == 0 {
            return Ok(None);
        }
        let predicted = tag(model, &dev_input, config.constrained, exec);
        Ok(Some(evaluate(dev, &predicted, MatchMode::Exact)?.micro.f1))
    };

    match config.optimizer {
        Optimizer::Lbfgs => {
            let params = LbfgsParams {
                max_iterations: config.epochs,
                ..LbfgsParams::default()
            };
            let mut weights = model.weights.clone();
            let mut failure = None;
            let (_, why) = lbfgs::minimize(
                &mut weights,
                |w| objective(w, &layout, config.l2, &instances, exec),
                &params,
                |k, w, fx| {
                    model.weights.copy_from_slice(w);
                    let dev_f1 = match dev_score(&model) {
                        Ok(f) => f,
                        Err(e) => {
                            failure = Some(e);
                            return true;
                        }
                    };
                    info!("iteration {k}: objective {fx:.6}{}", fmt_f1(dev_f1));
                    log.epochs.push(EpochLog {
                        epoch: k,
                        nll: fx,
                        dev_f1,
                    });
                    stopper.observe(k, dev_f1, w)
                },
            );
            if let Some(e) = failure {
                return Err(e);
            }
            model.weights = weights;
            log.stopped_early = why == Termination::Stopped;
            if why == Termination::LineSearchFailed {
                warn!("L-BFGS line search made no progress; keeping the last iterate");
            }
        }
        Optimizer::Sgd => {
            let n = instances.len();
            let batches_per_epoch = n.div_ceil(config.batch_size) as f64;
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = SplitMix64::new(config.seed);
            let mut v = model.weights.clone();
            let mut scale = 1.0;
            let mut t = 0.0;
            for epoch in 1..=config.epochs {
                rng.shuffle(&mut order);
                for batch in order.chunks(config.batch_size) {
                    let eta = config.learning_rate / (1.0 + t / batches_per_epoch);
                    let refs: Vec<&Instance> = batch.iter().map(|&i| &instances[i]).collect();
                    let g = sparse_gradient(&v, scale, &layout, &refs);
                    let decay = 1.0 - eta * config.l2 * batch.len() as f64 / n as f64;
                    if decay <= 0.0 {
                        return Err(Error::Config(
                            "learning rate too large for the l2 strength".into(),
                        ));
                    }
                    scale *= decay;
                    g.add_to(&mut v, &layout, -eta / scale);
                    if scale < 1e-9 {
                        v.iter_mut().for_each(|x| *x *= scale);
                        scale = 1.0;
                    }
                    t += 1.0;
                }
                model
                    .weights
                    .iter_mut()
                    .zip(&v)
                    .for_each(|(w, x)| *w = x * scale);
                let (nll, _) = objective(&model.weights, &layout, config.l2, &instances, exec);
                let dev_f1 = dev_score(&model)?;
                info!("epoch {epoch}: objective {nll:.6}{}", fmt_f1(dev_f1));
                log.epochs.push(EpochLog {
                    epoch,
                    nll,
                    dev_f1,
                });
                if stopper.observe(epoch, dev_f1, &model.weights) {
                    log.stopped_early = true;
                    break;
                }
            }
        }
    }

    log.best_epoch = log.epochs.last().map(|e| e.epoch);
    if let Some((epoch, weights)) = stopper.best {
        model.weights = weights;
        log.best_epoch = Some(epoch);
    }
    Ok((model, log))
}

fn fmt_f1(f1: Option<f64>) -> String {
    f1.map(|f| format!(", dev F1 {f:.4}")).unwrap_or_default()
}

struct EarlyStop {
    patience: usize,
    best_f1: f64,
    best: Option<(usize, Vec<f64>)>,
    stale: usize,
}

impl EarlyStop {
    fn new(patience: usize) -> Self {
        EarlyStop {
            patience,
            best_f1: f64::NEG_INFINITY,
            best: None,
            stale: 0,
        }
    }

    /// Records an epoch; `true` when training should stop.
    fn observe(&mut self, epoch: usize, f1: Option<f64>, weights: &[f64]) -> bool {
        let Some(f1) = f1 else {
            return false;
        };
        if f1 > self.best_f1 {
            self.best_f1 = f1;
            self.best = Some((epoch, weights.to_vec()));
            self.stale = 0;
            false
        } else {
            self.stale += 1;
            self.stale >= self.patience
        }
    }
}

/// Tags every sentence of `corpus` with the model's Viterbi path. Existing
/// tags are ignored and replaced.
pub fn tag(model: &CrfModel, corpus: &Corpus, constrained: bool, exec: Execution) -> Corpus {
    let sentences: Vec<&Sentence> = corpus.sentences().collect();
    let mut tagged = model.tag_sentences(&sentences, constrained, exec).into_iter();
    let documents = corpus
        .documents
        .iter()
        .map(|d| Document {
            id: d.id.clone(),
            sentences: d
                .sentences
                .iter()
                .map(|s| Sentence {
                    tokens: s.tokens.clone(),
                    tags: tagged.next(),
                })
                .collect(),
            source_text: d.source_text.clone(),
        })
        .collect();
    let label_set = LabelSet::new(
        model
            .labels()
            .iter()
            .filter(|t| t.is_begin())
            .filter_map(|t| t.label().map(str::to_string)),
    )
    .unwrap_or_default();
    Corpus {
        documents,
        label_set,
    }
}

/// One gazetteer per entity type, holding the lowercased surfaces of every
/// gold span of that type. Types are named as in the label set.
pub fn build_gazetteers(corpus: &Corpus) -> Result<Vec<Gazetteer>> {
    let mut label_set = corpus.label_set.clone();
    label_set.extend_with(&LabelSet::infer(&corpus.documents));
    let mut entries: Vec<BTreeSet<String>> = vec![BTreeSet::new(); label_set.types().len()];
    for s in corpus.sentences() {
        let words: Vec<&str> = s.words().collect();
        for span in s.spans()? {
            let t = label_set
                .types()
                .iter()
                .position(|t| *t == span.label)
                .expect("label set covers observed types");
            entries[t].insert(words[span.start..=span.end].join(" ").to_lowercase());
        }
    }
    label_set
        .types()
        .iter()
        .zip(entries)
        .filter(|(_, e)| !e.is_empty())
        .map(|(t, e)| Gazetteer::new(t.clone(), e))
        .collect()
}
