mod commands;
mod files;
mod run_file;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use protoner::exec::Execution;

/// Named-entity tagging toolkit for laboratory protocols.
#[derive(Parser, Debug)]
#[command(name = "protoner", version, arg_required_else_help = true)]
struct Cli {
    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert between BRAT standoff and CoNLL.
    Convert(ConvertArgs),
    /// Split a corpus into document-disjoint parts.
    Split(SplitArgs),
    /// Show the WordPiece alignment and chunk plan of each sentence.
    Tokenize(TokenizeArgs),
    /// Write one gazetteer per entity type from a tagged corpus.
    BuildGazetteers(BuildGazetteersArgs),
    /// Train the CRF baseline.
    TrainCrf(TrainArgs),
    /// Tag a corpus with a trained CRF.
    Tag(TagArgs),
    /// Decode encoder scores from a bridge file into tags.
    Predict(PredictArgs),
    /// Score predictions against gold in exact and partial match.
    Eval(EvalArgs),
    /// Span-level Cohen's kappa between two annotations.
    Kappa(KappaArgs),
    /// Subword fragmentation statistics for a corpus and vocabulary.
    FragReport(FragArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Conll,
    Brat,
}

#[derive(Args, Debug)]
struct CorpusInput {
    /// CoNLL file.
    #[arg(long, short)]
    input: PathBuf,
    /// Columns are separated by exactly one tab instead of any whitespace.
    #[arg(long)]
    tab: bool,
}

#[derive(Args, Debug)]
struct VocabArgs {
    /// WordPiece vocabulary, one piece per line.
    #[arg(long)]
    vocab: PathBuf,
    /// Lowercase and strip accents before matching.
    #[arg(long)]
    uncased: bool,
    /// Keep punctuation attached to the surrounding characters.
    #[arg(long)]
    no_split_punctuation: bool,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    #[arg(long, value_enum)]
    from: Format,
    #[arg(long, value_enum)]
    to: Format,
    /// Input file, or a directory of `.txt`/`.ann` pairs for BRAT.
    #[arg(long, short)]
    input: PathBuf,
    /// Output file (CoNLL, stdout when omitted) or directory (BRAT, required).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[command(flatten)]
    corpus: CorpusInput,
    /// Comma-separated fractions summing to 1, e.g. 0.6,0.2,0.2.
    #[arg(long, value_delimiter = ',', required = true)]
    ratios: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// One output file per ratio, in order.
    #[arg(long, short, required = true)]
    out: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct TokenizeArgs {
    #[command(flatten)]
    corpus: CorpusInput,
    #[command(flatten)]
    vocab: VocabArgs,
    /// Encoder input budget including the two delimiters.
    #[arg(long, default_value_t = protoner::subword::DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BuildGazetteersArgs {
    #[command(flatten)]
    corpus: CorpusInput,
    /// Directory that receives `<type>.txt` per entity type.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OptimizerArg {
    Lbfgs,
    Sgd,
}

#[derive(Args, Debug, Default)]
struct TrainArgs {
    /// Declarative run file (TOML); flags given on the command line win.
    #[arg(long)]
    run: Option<PathBuf>,
    /// Tagged training corpus.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Tagged development corpus for early stopping.
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Where to write the model.
    #[arg(long, short)]
    model: Option<PathBuf>,
    /// Entity types, one per line; inferred from the training data otherwise.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Feature template file; the built-in set otherwise.
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Gazetteer file, named after its file stem (repeatable).
    #[arg(long)]
    gazetteer: Vec<PathBuf>,
    /// Load every `.txt` in this directory as a gazetteer.
    #[arg(long)]
    gazetteer_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    optimizer: Option<OptimizerArg>,
    /// L-BFGS iterations or SGD epochs.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    /// Seeds SGD shuffling.
    #[arg(long)]
    seed: Option<u64>,
    /// Measure dev F1 without BIO constraints.
    #[arg(long)]
    unconstrained: bool,
    #[arg(long)]
    tab: bool,
}

#[derive(Args, Debug)]
struct TagArgs {
    #[arg(long, short)]
    model: PathBuf,
    #[command(flatten)]
    corpus: CorpusInput,
    /// Allow BIO-invalid paths in Viterbi decoding.
    #[arg(long)]
    unconstrained: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DecodeArg {
    Argmax,
    Constrained,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Bridge file with per-piece scores.
    #[arg(long)]
    bridge: PathBuf,
    #[command(flatten)]
    corpus: CorpusInput,
    #[command(flatten)]
    vocab: VocabArgs,
    /// Entity types the bridge alphabet must match; taken from the bridge header otherwise.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "constrained")]
    decode: DecodeArg,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Partial,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RepairArg {
    None,
    Begin,
    Merge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Table,
    Kv,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
    /// How to fix BIO-invalid predictions before scoring; `none` rejects them.
    #[arg(long, value_enum, default_value = "begin")]
    repair: RepairArg,
    #[arg(long, value_enum, default_value = "table")]
    format: ReportFormat,
    /// Also write the categorized error list here.
    #[arg(long)]
    errors: Option<PathBuf>,
    #[arg(long)]
    tab: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KappaArgs {
    /// First annotator's CoNLL file.
    #[arg(long)]
    a: PathBuf,
    /// Second annotator's CoNLL file.
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    tab: bool,
}

#[derive(Args, Debug)]
struct FragArgs {
    #[command(flatten)]
    corpus: CorpusInput,
    #[command(flatten)]
    vocab: VocabArgs,
    /// Number of most fragmented word types to list.
    #[arg(long, default_value_t = 20)]
    top: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match commands::run(cli.command, exec) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<files::UsageError>().is_some() => {
            eprintln!("error: {e}");
            eprintln!("run `protoner --help` for usage");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
