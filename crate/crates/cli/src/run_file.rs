use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::Deserialize;

use crate::files::{read_to_string, usage};

/// Optional TOML description of a `train-crf` run. Relative paths are
/// resolved against the run file's directory.
///
/// ```toml
/// train = "data/train.conll"
/// dev = "data/dev.conll"
/// model = "crf.json"
/// templates = "templates.txt"
/// gazetteers = ["gaz/Reagent.txt", "gaz/Device.txt"]
/// optimizer = "lbfgs"
/// epochs = 150
/// l2 = 1.0
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    #[serde(default)]
    pub gazetteers: Vec<PathBuf>,
    pub gazetteer_dir: Option<PathBuf>,
    pub optimizer: Option<String>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub l2: Option<f64>,
    pub patience: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub unconstrained: bool,
    #[serde(default)]
    pub tab: bool,
}

impl RunFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let mut run: RunFile = toml::from_str(&text)
            .map_err(|e| usage(format!("run file {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut run.train,
            &mut run.dev,
            &mut run.model,
            &mut run.labels,
            &mut run.templates,
            &mut run.gazetteer_dir,
        ]
        .into_iter()
        .flatten()
        {
            resolve(p);
        }
        run.gazetteers.iter_mut().for_each(resolve);
        Ok(run)
    }
}
