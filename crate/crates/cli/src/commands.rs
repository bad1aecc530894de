use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use protoner::bridge::{predict_corpus, read_bridge, DecodeMode};
use protoner::corpus::{
    parse_brat, repair_bio, split_dataset, validate_bio, write_brat, write_conll, BioTag, Corpus, LabelSet,
    RepairMode,
};
use protoner::crf::{
    build_gazetteers, default_templates, load_model, parse_templates, save_model, tag, train, Gazetteer,
    Optimizer, TrainConfig,
};
use protoner::eval::{cohen_kappa, error_report, evaluate, render_key_values, render_table, MatchMode};
use protoner::exec::Execution;
use protoner::subword::{chunk_sentence, fragmentation_report, project_labels_to_pieces, tokenize_sentence};

use crate::files::{open, read_labels, read_tagged, read_untagged, read_vocab, usage, Outputs};
use crate::run_file::RunFile;
use crate::*;

pub fn run(command: Command, exec: Execution) -> Result<()> {
    let mut out = Outputs::default();
    match command {
        Command::Convert(a) => convert(a, &mut out)?,
        Command::Split(a) => split(a, &mut out)?,
        Command::Tokenize(a) => tokenize(a, &mut out)?,
        Command::BuildGazetteers(a) => gazetteers(a, &mut out)?,
        Command::TrainCrf(a) => train_crf(a, exec, &mut out)?,
        Command::Tag(a) => tag_corpus(a, exec, &mut out)?,
        Command::Predict(a) => predict(a, exec, &mut out)?,
        Command::Eval(a) => eval(a, &mut out)?,
        Command::Kappa(a) => kappa(a, &mut out)?,
        Command::FragReport(a) => frag_report(a, &mut out)?,
    }
    out.commit()
}

fn brat_documents(input: &Path) -> Result<Corpus> {
    let anns: Vec<PathBuf> = if input.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(input)
            .with_context(|| format!("listing {}", input.display()))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        v.retain(|p| p.extension().is_some_and(|e| e == "ann"));
        v.sort();
        v
    } else if input.exists() {
        vec![input.with_extension("ann")]
    } else {
        return Err(usage(format!("{} does not exist", input.display())));
    };
    if anns.is_empty() {
        bail!("no .ann files in {}", input.display());
    }
    let mut documents = Vec::new();
    for ann in anns {
        let txt = ann.with_extension("txt");
        let text = std::fs::read_to_string(&txt).with_context(|| format!("reading {}", txt.display()))?;
        let id = ann.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let parsed = parse_brat(&id, &text, open(&ann)?).with_context(|| format!("in {}", ann.display()))?;
        for w in &parsed.warnings {
            warn!("{id}: {w}");
        }
        documents.push(parsed.document);
    }
    Ok(Corpus::from_documents(documents))
}

fn convert(a: ConvertArgs, out: &mut Outputs) -> Result<()> {
    let corpus = match a.from {
        Format::Brat => brat_documents(&a.input)?,
        Format::Conll => read_tagged(&a.input, false)?,
    };
    match a.to {
        Format::Conll => out.emit(a.out.as_deref(), write_conll(&corpus)?),
        Format::Brat => {
            let dir = a.out.ok_or_else(|| usage("--out <dir> is required for BRAT output"))?;
            for doc in &corpus.documents {
                let (text, ann) = write_brat(doc)?;
                let stem = doc.id.replace(['/', '\\'], "_");
                out.file(dir.join(format!("{stem}.txt")), text);
                out.file(dir.join(format!("{stem}.ann")), ann);
            }
        }
    }
    info!("converted {} documents", corpus.documents.len());
    Ok(())
}

fn split(a: SplitArgs, out: &mut Outputs) -> Result<()> {
    if a.out.len() != a.ratios.len() {
        return Err(usage(format!(
            "{} ratios but {} --out paths",
            a.ratios.len(),
            a.out.len()
        )));
    }
    let corpus = read_tagged(&a.corpus.input, a.corpus.tab)?;
    let parts = split_dataset(&corpus, &a.ratios, a.seed)?;
    for (path, part) in a.out.iter().zip(&parts) {
        info!("{}: {} documents", path.display(), part.documents.len());
        out.file(path, write_conll(part)?);
    }
    Ok(())
}

fn tokenize(a: TokenizeArgs, out: &mut Outputs) -> Result<()> {
    let corpus = read_untagged_or_tagged(&a.corpus.input, a.corpus.tab)?;
    let vocab = read_vocab(&a.vocab)?;
    let mut text = format!("#vocab {}\n#budget {}\n", vocab.fingerprint(), a.budget);
    for doc in &corpus.documents {
        for (s, sentence) in doc.sentences.iter().enumerate() {
            let aligned = tokenize_sentence(sentence, &vocab);
            let plan = chunk_sentence(&aligned, a.budget)
                .with_context(|| format!("document {}, sentence {s}", doc.id))?;
            let labels = match &sentence.tags {
                Some(tags) => project_labels_to_pieces(&aligned, tags)?
                    .into_iter()
                    .map(|(_, l)| l.to_string())
                    .collect(),
                None => vec!["-".to_string(); aligned.piece_count()],
            };
            for (c, range) in plan.piece_ranges(&aligned).into_iter().enumerate() {
                for p in range {
                    writeln!(
                        text,
                        "{}\t{s}\t{p}\t{}\t{}\t{c}\t{}",
                        doc.id, aligned.pieces[p], aligned.word_index[p], labels[p]
                    )?;
                }
            }
        }
    }
    out.emit(a.out.as_deref(), text);
    Ok(())
}

/// Tagged if the file has a tag column on every line, untagged otherwise.
fn read_untagged_or_tagged(path: &Path, tab: bool) -> Result<Corpus> {
    read_tagged(path, tab).or_else(|_| read_untagged(path, tab))
}

fn gazetteers(a: BuildGazetteersArgs, out: &mut Outputs) -> Result<()> {
    let corpus = read_tagged(&a.corpus.input, a.corpus.tab)?;
    for g in build_gazetteers(&corpus)? {
        let body: String = g.entries().map(|e| format!("{e}\n")).collect();
        info!("{}: {} entries", g.name, g.len());
        out.file(a.out_dir.join(format!("{}.txt", g.name)), body);
    }
    Ok(())
}

fn load_gazetteers(files: &[PathBuf], dir: Option<&Path>) -> Result<Vec<Gazetteer>> {
    let mut paths = files.to_vec();
    if let Some(dir) = dir {
        if !dir.is_dir() {
            return Err(usage(format!("{} is not a directory", dir.display())));
        }
        let mut found: Vec<PathBuf> = std::fs::read_dir(dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        found.retain(|p| p.extension().is_some_and(|e| e == "txt"));
        found.sort();
        paths.extend(found);
    }
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Gazetteer::read(name, open(p)?).with_context(|| format!("in {}", p.display()))
        })
        .collect()
}

/// Fails when the corpus uses an entity type outside `labels`, then adopts `labels`.
fn restrict_labels(corpus: &mut Corpus, labels: &LabelSet, what: &str) -> Result<()> {
    for t in corpus.label_set.types() {
        if !labels.contains_type(t) {
            bail!("{what} uses entity type {t:?}, which is not in the label set");
        }
    }
    corpus.label_set = labels.clone();
    Ok(())
}

fn train_crf(a: TrainArgs, exec: Execution, out: &mut Outputs) -> Result<()> {
    let run = match &a.run {
        Some(p) => RunFile::load(p)?,
        None => RunFile::default(),
    };
    let train_path = a.train.or(run.train).ok_or_else(|| usage("--train is required"))?;
    let model_path = a.model.or(run.model).ok_or_else(|| usage("--model is required"))?;
    let dev_path = a.dev.or(run.dev);
    let tab = a.tab || run.tab;

    let optimizer = match a.optimizer {
        Some(OptimizerArg::Lbfgs) => Optimizer::Lbfgs,
        Some(OptimizerArg::Sgd) => Optimizer::Sgd,
        None => match run.optimizer.as_deref() {
            None | Some("lbfgs") => Optimizer::Lbfgs,
            Some("sgd") => Optimizer::Sgd,
            Some(other) => return Err(usage(format!("unknown optimizer {other:?} in run file"))),
        },
    };
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        optimizer,
        learning_rate: a.learning_rate.or(run.learning_rate).unwrap_or(defaults.learning_rate),
        epochs: a.epochs.or(run.epochs).unwrap_or(defaults.epochs),
        batch_size: a.batch_size.or(run.batch_size).unwrap_or(defaults.batch_size),
        l2: a.l2.or(run.l2).unwrap_or(defaults.l2),
        patience: a.patience.or(run.patience).unwrap_or(defaults.patience),
        seed: a.seed.or(run.seed).unwrap_or(defaults.seed),
        constrained: !(a.unconstrained || run.unconstrained),
        execution: exec,
    };
    let templates = match a.templates.or(run.templates) {
        Some(p) => parse_templates(open(&p)?).with_context(|| format!("in {}", p.display()))?,
        None => default_templates(),
    };
    let mut gazetteer_files = run.gazetteers;
    gazetteer_files.extend(a.gazetteer);
    let gazetteers = load_gazetteers(&gazetteer_files, a.gazetteer_dir.or(run.gazetteer_dir).as_deref())?;

    let mut corpus = read_tagged(&train_path, tab)?;
    let mut dev = match &dev_path {
        Some(p) => read_tagged(p, tab)?,
        None => Corpus::empty(),
    };
    if let Some(p) = a.labels.or(run.labels) {
        let labels = read_labels(&p)?;
        restrict_labels(&mut corpus, &labels, "training data")?;
        dev.label_set = labels;
    }

    let (model, log) = train(&corpus, &dev, &templates, &gazetteers, &config)?;
    if let Some(best) = log.best_epoch {
        info!("kept the parameters from step {best} of {}", log.epochs.len());
    }
    let mut bytes = Vec::new();
    save_model(&model, &mut bytes)?;
    out.file(model_path, bytes);
    Ok(())
}

fn tag_corpus(a: TagArgs, exec: Execution, out: &mut Outputs) -> Result<()> {
    let model = load_model(open(&a.model)?).with_context(|| format!("loading {}", a.model.display()))?;
    let corpus = read_untagged(&a.corpus.input, a.corpus.tab)?;
    let tagged = tag(&model, &corpus, !a.unconstrained, exec);
    out.emit(a.out.as_deref(), write_conll(&tagged)?);
    Ok(())
}

/// The label set whose alphabet is exactly `alphabet`, if there is one.
fn labels_from_alphabet(alphabet: &[BioTag]) -> Result<LabelSet> {
    let types: Vec<&str> = alphabet.iter().filter(|t| t.is_begin()).filter_map(BioTag::label).collect();
    let labels = LabelSet::new(types)?;
    if labels.alphabet() != alphabet {
        bail!("bridge alphabet is not in O, B-X, I-X, ... order");
    }
    Ok(labels)
}

fn predict(a: PredictArgs, exec: Execution, out: &mut Outputs) -> Result<()> {
    let vocab = read_vocab(&a.vocab)?;
    let mut corpus = read_untagged(&a.corpus.input, a.corpus.tab)?;
    let (bridge, labels) = match &a.labels {
        Some(p) => {
            let labels = read_labels(p)?;
            (read_bridge(open(&a.bridge)?, &labels.alphabet())?, labels)
        }
        None => {
            // two passes: learn the alphabet from the header, then validate against it
            let header: Vec<String> = std::io::BufRead::lines(open(&a.bridge)?)
                .take_while(|l| l.as_ref().is_ok_and(|l| l.starts_with('#') || l.is_empty()))
                .collect::<Result<_, _>>()?;
            let alphabet: Vec<BioTag> = header
                .iter()
                .find_map(|l| l.strip_prefix("#alphabet"))
                .ok_or_else(|| anyhow::anyhow!("bridge file has no #alphabet header"))?
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()?;
            let labels = labels_from_alphabet(&alphabet)?;
            (read_bridge(open(&a.bridge)?, &alphabet)?, labels)
        }
    };
    corpus.label_set = labels;
    let mode = match a.decode {
        DecodeArg::Argmax => DecodeMode::Argmax,
        DecodeArg::Constrained => DecodeMode::Constrained,
    };
    let tagged = predict_corpus(&bridge, &corpus, &vocab, mode, exec)
        .with_context(|| format!("decoding {}", a.bridge.display()))?;
    out.emit(a.out.as_deref(), write_conll(&tagged)?);
    Ok(())
}

fn repaired(mut corpus: Corpus, mode: RepairArg, path: &Path) -> Result<Corpus> {
    let mode = match mode {
        RepairArg::Begin => RepairMode::Begin,
        RepairArg::Merge => RepairMode::Merge,
        RepairArg::None => return Ok(corpus),
    };
    let mut fixed = 0;
    for doc in &mut corpus.documents {
        for s in &mut doc.sentences {
            if let Some(tags) = &mut s.tags {
                if !validate_bio(tags).is_empty() {
                    *tags = repair_bio(tags, mode);
                    fixed += 1;
                }
            }
        }
    }
    if fixed > 0 {
        warn!("{}: repaired BIO violations in {fixed} sentence(s)", path.display());
    }
    Ok(corpus)
}

fn eval(a: EvalArgs, out: &mut Outputs) -> Result<()> {
    let gold = read_tagged(&a.gold, a.tab)?;
    let pred = repaired(read_tagged(&a.pred, a.tab)?, a.repair, &a.pred)?;
    let modes: &[MatchMode] = match a.mode {
        ModeArg::Exact => &[MatchMode::Exact],
        ModeArg::Partial => &[MatchMode::Partial],
        ModeArg::Both => &[MatchMode::Exact, MatchMode::Partial],
    };
    let reports = modes
        .iter()
        .map(|&m| evaluate(&gold, &pred, m))
        .collect::<protoner::Result<Vec<_>>>()?;
    let text = match a.format {
        ReportFormat::Table => render_table(&reports),
        ReportFormat::Kv => render_key_values(&reports),
    };
    out.emit(a.out.as_deref(), text);
    if let Some(path) = a.errors {
        let mut body = String::from("#document\tsentence\tkind\tgold\tpred\n");
        let errors = error_report(&gold, &pred)?;
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for e in &errors {
            *counts.entry(e.kind.to_string()).or_default() += 1;
            writeln!(body, "{e}")?;
        }
        for (kind, n) in counts {
            info!("{kind}: {n}");
        }
        out.file(path, body);
    }
    Ok(())
}

fn kappa(a: KappaArgs, out: &mut Outputs) -> Result<()> {
    let first = read_tagged(&a.a, a.tab)?;
    let second = read_tagged(&a.b, a.tab)?;
    let r = cohen_kappa(&first, &second)?;
    out.emit(
        None,
        format!(
            "kappa={:.6}\nobserved={:.6}\nexpected={:.6}\nunits={}\n",
            r.kappa, r.observed, r.expected, r.units
        ),
    );
    Ok(())
}

fn frag_report(a: FragArgs, out: &mut Outputs) -> Result<()> {
    let corpus = read_untagged_or_tagged(&a.corpus.input, a.corpus.tab)?;
    let vocab = read_vocab(&a.vocab)?;
    let report = fragmentation_report(&corpus, &vocab);
    out.emit(a.out.as_deref(), report.to_tsv(a.top));
    Ok(())
}
