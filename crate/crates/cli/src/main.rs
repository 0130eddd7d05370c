//! Command-line front end: translate treebanks into code-mixed ones,
//! train and run the parser, and evaluate.
//!
//! Exit status is 0 on success, 1 on an internal error and 2 on a usage
//! or data error.

mod commands;
mod manifest;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "codemix",
    version,
    about = "Code-mixed treebank translation and cross-lingual dependency parsing"
)]
pub struct Cli {
    /// Key-value file supplying defaults for any long flag
    #[arg(long, global = true, value_name = "FILE")]
    manifest: Option<PathBuf>,

    /// More log output (repeat for debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Translate a source treebank into a code-mixed treebank
    Translate(TranslateArgs),
    /// Concatenate two treebanks
    Mix(MixArgs),
    /// Train a parser
    Train(TrainArgs),
    /// Parse a treebank with a trained model
    Parse(ParseArgs),
    /// Score predicted trees against gold trees
    Eval(EvalArgs),
    /// Translate, train and evaluate over a grid of ratios
    Sweep(SweepArgs),
    /// Switch off deletion and reordering in turn
    Ablate(AblateArgs),
    /// Generate a synthetic parallel corpus with resources
    Synth(SynthArgs),
}

/// Source treebank plus alignment input.
#[derive(Args, Debug, Clone)]
pub struct AlignmentInput {
    /// Source CoNLL-U treebank
    #[arg(long, value_name = "FILE")]
    pub source: Option<PathBuf>,

    /// Pair file: id, source tokens and target tokens, tab separated
    #[arg(long, value_name = "FILE")]
    pub pairs: Option<PathBuf>,

    /// Alignment matrices, one JSON record per line
    #[arg(long, value_name = "FILE", conflicts_with = "lexical_table")]
    pub alignments: Option<PathBuf>,

    /// Lexical translation table to derive the matrices from
    #[arg(long, value_name = "FILE")]
    pub lexical_table: Option<PathBuf>,

    /// Smoothing mass added to every derived probability
    #[arg(long, value_name = "P")]
    pub smoothing: Option<f64>,

    /// Keep unaligned source words
    #[arg(long)]
    pub no_delete: bool,

    /// Keep substituted words in source order
    #[arg(long)]
    pub no_reorder: bool,
}

#[derive(Args, Debug)]
pub struct TranslateArgs {
    #[command(flatten)]
    pub input: AlignmentInput,

    /// Translation ratio in [0, 1]
    #[arg(long, value_name = "RATIO")]
    pub lambda: Option<f64>,

    /// Reserved; translation is deterministic
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output treebank (default: standard output)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Write per-sentence statistics as JSON
    #[arg(long, value_name = "FILE")]
    pub stats: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MixArgs {
    /// First treebank
    pub first: PathBuf,
    /// Second treebank, appended after the first
    pub second: PathBuf,
    /// Output treebank (default: standard output)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Parser hyper-parameters; unset values come from the manifest, then
/// from the defaults (or the desk preset).
#[derive(Args, Debug, Clone, Default)]
pub struct ParserArgs {
    /// Start from the small single-layer preset
    #[arg(long)]
    pub desk: bool,
    /// Drop word vectors; use clusters and POS tags only
    #[arg(long)]
    pub delexicalized: bool,
    /// Passes over the training data
    #[arg(long, value_name = "N")]
    pub epochs: Option<usize>,
    /// Sentences per optimizer step
    #[arg(long, value_name = "N")]
    pub batch_size: Option<usize>,
    /// Initial Adam learning rate
    #[arg(long, value_name = "RATE")]
    pub learning_rate: Option<f64>,
    /// Dropout rate during training
    #[arg(long, value_name = "P")]
    pub dropout: Option<f64>,
    /// Word embedding width (ignored with pretrained embeddings)
    #[arg(long, value_name = "N")]
    pub embed_dim: Option<usize>,
    /// Cluster embedding width
    #[arg(long, value_name = "N")]
    pub cluster_embed_dim: Option<usize>,
    /// POS embedding width
    #[arg(long, value_name = "N")]
    pub pos_embed_dim: Option<usize>,
    /// Stacked BiLSTM layers
    #[arg(long, value_name = "N")]
    pub encoder_layers: Option<usize>,
    /// LSTM state size per direction
    #[arg(long, value_name = "N")]
    pub encoder_hidden: Option<usize>,
    /// Width of the arc projections
    #[arg(long, value_name = "N")]
    pub arc_mlp_dim: Option<usize>,
    /// Width of the label projections
    #[arg(long, value_name = "N")]
    pub label_mlp_dim: Option<usize>,
    /// Training seed
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Pretrained cross-lingual resources.
#[derive(Args, Debug, Clone)]
pub struct ResourceArgs {
    /// Word embeddings in word2vec text format
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Word clusters: word, tab, cluster id
    #[arg(long, value_name = "FILE")]
    pub clusters: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Training treebank
    #[arg(long, value_name = "FILE")]
    pub train: Option<PathBuf>,
    #[command(flatten)]
    pub resources: ResourceArgs,
    #[command(flatten)]
    pub parser: ParserArgs,
    /// Where to save the model
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ParseArgs {
    /// Trained model
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Treebank to parse; existing heads and labels are ignored
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Output treebank (default: standard output)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Gold treebank
    pub gold: PathBuf,
    /// Predicted treebank
    pub predicted: PathBuf,
    /// Print the report as JSON
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub input: AlignmentInput,
    /// Gold target-language treebank to evaluate on
    #[arg(long, value_name = "FILE")]
    pub eval: Option<PathBuf>,
    #[command(flatten)]
    pub resources: ResourceArgs,
    #[command(flatten)]
    pub parser: ParserArgs,
    /// Runs per setting; run t trains with seed + t
    #[arg(long, value_name = "N")]
    pub trials: Option<usize>,
    /// Worker threads (results do not depend on this)
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Comma-separated ratios
    #[arg(long, value_name = "LIST")]
    pub grid: Option<String>,
    /// CSV with one line per trial (default: standard output)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Translation ratio
    #[arg(long, value_name = "RATIO")]
    pub lambda: Option<f64>,
    /// Also write the rows as JSON
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Directory to write the corpus and resources into
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Parallel training sentences
    #[arg(long, value_name = "N")]
    pub train_size: Option<usize>,
    /// Clean target-language evaluation sentences
    #[arg(long, value_name = "N")]
    pub eval_size: Option<usize>,
    /// Fraction of target words with a corrupted alignment
    #[arg(long, value_name = "P")]
    pub noise: Option<f64>,
    /// Embedding width
    #[arg(long, value_name = "N")]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// An error caused by the user's input rather than by this program.
#[derive(Debug)]
pub struct DataError(pub String);

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

pub fn data_error(message: impl Into<String>) -> anyhow::Error {
    DataError(message.into()).into()
}

/// Read a whole input file; failures are data errors naming the path.
pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|err| data_error(format!("{}: {}", path.display(), err)))
}

/// Parse an input file; failures are data errors naming the path.
pub fn read_with<T, E, F>(path: &Path, parse: F) -> Result<T>
where
    E: fmt::Display,
    F: FnOnce(std::io::BufReader<fs::File>) -> std::result::Result<T, E>,
{
    let file =
        fs::File::open(path).map_err(|err| data_error(format!("{}: {}", path.display(), err)))?;
    parse(std::io::BufReader::new(file))
        .map_err(|err| data_error(format!("{}: {}", path.display(), err)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {:#}", err);
            if err.is::<DataError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
