//! Linear-chain conditional random field over word-level BIO tags.
//!
//! The model scores a tag path `y` for a sentence with per-position features
//! `x` as `start[y0] + sum_i W[x_i, y_i] + sum_i T[y_{i-1}, y_i] + end[y_{n-1}]`
//! and normalizes over all paths. Inference ([`lattice`]) is exact and runs
//! in log space; training minimizes the L2-regularized negative
//! log-likelihood with L-BFGS or SGD.

mod features;
mod io;
pub mod lattice;
pub mod lbfgs;
mod model;
mod objective;
mod train;

pub use features::{
    default_templates, parse_templates, FeatureExtractor, FeatureTemplate, Gazetteer, TemplateKind,
};
pub use io::{load_model, save_model, MODEL_FORMAT, MODEL_VERSION};
pub use model::{bio_masks, CrfModel, FeatureDictionary, FeatureVector};
pub use objective::{nll_and_gradient, Instance, GRADIENT_CHUNK};
pub use train::{
    build_gazetteers, featurize_corpus, tag, train, EpochLog, Optimizer, TrainConfig, TrainLog,
};
