#![allow(dead_code)]

use protoner::bridge::{export_scores, BridgeFile};
use protoner::corpus::{BioTag, Corpus, Document, LabelSet, Sentence};
use protoner::crf::{CrfModel, FeatureVector, Instance};
use protoner::subword::{CaseMode, Vocabulary};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn tags(s: &str) -> Vec<BioTag> {
    s.split_whitespace().map(|t| t.parse().unwrap()).collect()
}

/// Alphabet of the first `m` tags of `O B-X I-X B-Y I-Y`.
pub fn alphabet(m: usize) -> Vec<BioTag> {
    tags("O B-X I-X B-Y I-Y")[..m].to_vec()
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// A model over `features` anonymous features with every weight drawn from U[-1, 1].
pub fn random_model(rng: &mut StdRng, m: usize, features: usize, l2: f64) -> CrfModel {
    let mut model = CrfModel::with_feature_count(alphabet(m), features, l2);
    for w in model.weights_mut() {
        *w = rng.random_range(-1.0..=1.0);
    }
    model
}

pub fn random_features(rng: &mut StdRng, n: usize, features: usize) -> Vec<FeatureVector> {
    (0..n)
        .map(|_| {
            let mut entries = Vec::new();
            for f in 0..features as u32 {
                if rng.random_bool(0.4) {
                    let v = if rng.random_bool(0.5) { 1.0 } else { rng.random_range(0.1..2.0) };
                    entries.push((f, v));
                }
            }
            if entries.is_empty() {
                entries.push((rng.random_range(0..features as u32), 1.0));
            }
            FeatureVector { entries }
        })
        .collect()
}

pub fn random_instance(rng: &mut StdRng, n: usize, m: usize, features: usize) -> Instance {
    Instance {
        features: random_features(rng, n, features),
        gold: (0..n).map(|_| rng.random_range(0..m)).collect(),
    }
}

/// Every label sequence of length `n` over `m` labels, in lexicographic order.
pub fn all_paths(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..m).map(move |y| {
                    let mut q = p.clone();
                    q.push(y);
                    q
                })
            })
            .collect();
    }
    out
}

pub struct Enumerated {
    pub log_z: f64,
    pub best: Vec<usize>,
    pub best_score: f64,
    /// `n x m`
    pub node: Vec<f64>,
    /// `(n - 1) x m x m`
    pub edge: Vec<f64>,
}

/// Brute-force inference by scoring every path explicitly.
pub fn enumerate(model: &CrfModel, features: &[FeatureVector]) -> Enumerated {
    let n = features.len();
    let m = model.label_count();
    let paths = all_paths(n, m);
    let scores: Vec<f64> = paths.iter().map(|p| explicit_score(model, features, p)).collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    let (mut best, mut best_score) = (0, f64::NEG_INFINITY);
    for (i, &s) in scores.iter().enumerate() {
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    let mut node = vec![0.0; n * m];
    let mut edge = vec![0.0; n.saturating_sub(1) * m * m];
    for (p, s) in paths.iter().zip(&scores) {
        let prob = (s - log_z).exp();
        for (i, &y) in p.iter().enumerate() {
            node[i * m + y] += prob;
        }
        for i in 1..n {
            edge[(i - 1) * m * m + p[i - 1] * m + p[i]] += prob;
        }
    }
    Enumerated {
        log_z,
        best: paths[best].clone(),
        best_score,
        node,
        edge,
    }
}

/// Path score recomputed from the weight accessors, independent of the lattice code.
pub fn explicit_score(model: &CrfModel, features: &[FeatureVector], path: &[usize]) -> f64 {
    let m = model.label_count();
    let f = model.feature_count();
    let w = model.weights();
    let start = f * m + m * m;
    let end = start + m;
    let mut s = w[start + path[0]] + w[end + path[path.len() - 1]];
    for (i, fv) in features.iter().enumerate() {
        for &(id, v) in &fv.entries {
            s += v * model.emission(id, path[i]);
        }
        if i > 0 {
            s += model.transition(path[i - 1], path[i]);
        }
    }
    s
}

const REAGENTS: [&str; 6] = ["sds", "ethanol", "pbs", "glycerol", "trizol", "agarose"];
const REAGENT_HEADS: [&str; 3] = ["tris", "sodium", "acetic"];
const REAGENT_TAILS: [&str; 3] = ["buffer", "chloride", "acid"];
const DEVICES: [&str; 4] = ["centrifuge", "pipette", "vortexer", "thermocycler"];
const ACTIONS: [&str; 5] = ["add", "mix", "spin", "transfer", "incubate"];
const FILLER: [&str; 6] = ["the", "sample", "gently", "into", "with", "then"];
const AMOUNTS: [&str; 4] = ["5", "10", "250", "1.5"];
const UNITS: [&str; 3] = ["ml", "ul", "min"];

/// A corpus where every word type carries exactly one tag, so a
/// gazetteer lookup identifies each token's tag without context.
pub fn separable_corpus(sentences: usize, seed: u64) -> Corpus {
    let mut rng = rng(seed);
    let mut docs = Vec::new();
    let per_doc = 10;
    for d in 0..sentences.div_ceil(per_doc) {
        let mut doc_sentences = Vec::new();
        for _ in 0..per_doc.min(sentences - d * per_doc) {
            let mut pairs: Vec<(&str, &str)> = Vec::new();
            pairs.push((ACTIONS[rng.random_range(0..ACTIONS.len())], "B-Action"));
            let parts = rng.random_range(2..6);
            for _ in 0..parts {
                match rng.random_range(0..6) {
                    0 => pairs.push((REAGENTS[rng.random_range(0..REAGENTS.len())], "B-Reagent")),
                    1 => {
                        let k = rng.random_range(0..REAGENT_HEADS.len());
                        pairs.push((REAGENT_HEADS[k], "B-Reagent"));
                        pairs.push((REAGENT_TAILS[k], "I-Reagent"));
                    }
                    2 => pairs.push((DEVICES[rng.random_range(0..DEVICES.len())], "B-Device")),
                    3 => {
                        pairs.push((AMOUNTS[rng.random_range(0..AMOUNTS.len())], "B-Amount"));
                        pairs.push((UNITS[rng.random_range(0..UNITS.len())], "I-Amount"));
                    }
                    _ => pairs.push((FILLER[rng.random_range(0..FILLER.len())], "O")),
                }
            }
            pairs.push((".", "O"));
            doc_sentences.push(Sentence::tagged(
                pairs.into_iter().map(|(w, t)| (w, t.parse::<BioTag>().unwrap())),
            ));
        }
        docs.push(Document::new(format!("protocol_{d:03}"), doc_sentences));
    }
    Corpus::from_documents(docs)
}

/// A WordPiece vocabulary that splits some of the toy words into several pieces.
pub fn toy_vocab() -> Vocabulary {
    let mut pieces: Vec<String> = ["[UNK]", "[CLS]", "[SEP]", ".", "1", "##.", "##5", "5", "##0", "##5"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for w in ["sd", "##s", "eth", "##anol", "pbs", "glyc", "##erol", "tri", "##zol", "agar", "##ose"] {
        pieces.push(w.into());
    }
    for w in ["tris", "sodium", "acetic", "buffer", "chlor", "##ide", "acid", "centrifuge"] {
        pieces.push(w.into());
    }
    for w in ["pip", "##ette", "vortex", "##er", "thermo", "##cycle", "##r", "add", "mix", "spin"] {
        pieces.push(w.into());
    }
    for w in ["transfer", "incubate", "the", "sample", "gently", "into", "with", "then", "2", "##5", "ml", "ul", "min"] {
        pieces.push(w.into());
    }
    pieces.sort();
    pieces.dedup();
    Vocabulary::new(pieces, CaseMode::Cased).unwrap()
}

/// One-hot scores: `hot` at the gold tag of each word's pieces, 0 elsewhere.
/// Continuation pieces get a misleading hot `O` so that reading anything but
/// the first piece would be caught.
pub fn one_hot_bridge(gold: &Corpus, vocab: &Vocabulary, budget: usize, hot: f64) -> BridgeFile {
    let labels: LabelSet = gold.label_set.clone();
    let alphabet = labels.alphabet();
    let mut lookup = std::collections::HashMap::new();
    for doc in &gold.documents {
        for (s, sentence) in doc.sentences.iter().enumerate() {
            lookup.insert((doc.id.clone(), s), sentence.tags.clone().unwrap());
        }
    }
    export_scores(gold, vocab, &labels, budget, |doc, s, aligned, pieces| {
        let tags = &lookup[&(doc.to_string(), s)];
        pieces
            .map(|p| {
                let w = aligned.word_index[p];
                let mut row = vec![0.0; alphabet.len()];
                let target = if aligned.first_piece_index[w] == p {
                    alphabet.iter().position(|t| t == &tags[w]).unwrap()
                } else {
                    0
                };
                row[target] = hot;
                row
            })
            .collect()
    })
    .unwrap()
}
