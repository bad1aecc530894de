use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use protoner::corpus::{parse_conll, parse_conll_untagged, ColumnSep, Corpus, LabelSet};
use protoner::subword::{load_vocab, CaseMode, Vocabulary};

use crate::VocabArgs;

/// A problem with how the command was invoked rather than with the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

/// Opens an input that the command line promised exists.
pub fn open(path: &Path) -> Result<BufReader<File>> {
    if !path.exists() {
        return Err(usage(format!("{} does not exist", path.display())));
    }
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(file))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(usage(format!("{} does not exist", path.display())));
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn sep(tab: bool) -> ColumnSep {
    if tab {
        ColumnSep::Tab
    } else {
        ColumnSep::Whitespace
    }
}

pub fn read_tagged(path: &Path, tab: bool) -> Result<Corpus> {
    parse_conll(open(path)?, sep(tab)).with_context(|| format!("in {}", path.display()))
}

/// Reads a corpus whose second column, if any, is ignored.
pub fn read_untagged(path: &Path, tab: bool) -> Result<Corpus> {
    parse_conll_untagged(open(path)?, sep(tab)).with_context(|| format!("in {}", path.display()))
}

pub fn read_labels(path: &Path) -> Result<LabelSet> {
    LabelSet::read(open(path)?).with_context(|| format!("in {}", path.display()))
}

pub fn read_vocab(args: &VocabArgs) -> Result<Vocabulary> {
    let mode = if args.uncased {
        CaseMode::Uncased
    } else {
        CaseMode::Cased
    };
    let mut vocab = load_vocab(open(&args.vocab)?, mode)
        .with_context(|| format!("in {}", args.vocab.display()))?;
    vocab.split_punctuation = !args.no_split_punctuation;
    Ok(vocab)
}

/// Output files staged in memory and written only once the whole command
/// has succeeded. Each file goes through a temporary sibling and a rename.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
    stdout: Vec<u8>,
}

impl Outputs {
    pub fn file(&mut self, path: impl Into<PathBuf>, content: impl Into<Vec<u8>>) {
        self.files.push((path.into(), content.into()));
    }

    /// Writes to `path`, or to stdout when there is none.
    pub fn emit(&mut self, path: Option<&Path>, content: impl Into<Vec<u8>>) {
        match path {
            Some(p) => self.file(p, content),
            None => self.stdout.extend(content.into()),
        }
    }

    pub fn commit(self) -> Result<()> {
        for (path, content) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let mut tmp = path.clone().into_os_string();
            tmp.push(".partial");
            let tmp = PathBuf::from(tmp);
            fs::write(&tmp, content).with_context(|| format!("writing {}", tmp.display()))?;
            fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
        }
        let mut out = io::stdout().lock();
        out.write_all(&self.stdout)?;
        out.flush()?;
        Ok(())
    }
}
