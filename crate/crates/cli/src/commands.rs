use std::fmt::{self, Write as _};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use codemix::alignment::{
    derive_matrix, load_lexical_table, load_matrix_file, read_pairs, write_matrix_file,
    write_pairs, AlignmentMatrix, SentencePair, DEFAULT_SMOOTHING,
};
use codemix::conllu::{read_conllu, to_conllu_string, Treebank};
use codemix::eval::{
    ablation, ablation_table, score, sweep_lambda, write_sweep_csv, ExperimentData, SweepConfig,
};
use codemix::parser::{load_model, parse, save_model, train, ParserConfig};
use codemix::resources::{
    load_clusters, load_embeddings, write_clusters, write_embeddings, Resources,
};
use codemix::synthetic::SyntheticLanguage;
use codemix::translate::{mix_corpora, translate_treebank, CodeMixConfig, TranslationStats};

use crate::manifest::Manifest;
use crate::{
    data_error, read_with, AblateArgs, AlignmentInput, Cli, Command, EvalArgs, ExperimentArgs,
    MixArgs, ParseArgs, ParserArgs, ResourceArgs, SweepArgs, SynthArgs, TrainArgs, TranslateArgs,
};

const DEFAULT_LAMBDA: f64 = 0.7;

fn data<E: fmt::Display>(err: E) -> anyhow::Error {
    data_error(err.to_string())
}

pub fn run(cli: Cli) -> Result<()> {
    let manifest = match &cli.manifest {
        Some(path) => Manifest::load(path)?,
        None => Manifest::default(),
    };
    let m = &manifest;
    match cli.command {
        Command::Translate(args) => translate_cmd(args, m),
        Command::Mix(args) => mix_cmd(args),
        Command::Train(args) => train_cmd(args, m),
        Command::Parse(args) => parse_cmd(args, m),
        Command::Eval(args) => eval_cmd(args),
        Command::Sweep(args) => sweep_cmd(args, m),
        Command::Ablate(args) => ablate_cmd(args, m),
        Command::Synth(args) => synth_cmd(args, m),
    }
}

/// Write to a file, or to standard output without a path.
fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(path) => {
            fs::write(path, bytes).map_err(|err| data_error(format!("{}: {}", path.display(), err)))
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn read_treebank(path: &Path) -> Result<Treebank> {
    read_with(path, read_conllu)
}

fn resolve_resources(args: &ResourceArgs, m: &Manifest) -> Result<Resources> {
    let embeddings = match m.path(args.embeddings.clone(), "embeddings") {
        Some(path) => Some(read_with(&path, load_embeddings)?),
        None => None,
    };
    let clusters = match m.path(args.clusters.clone(), "clusters") {
        Some(path) => Some(read_with(&path, load_clusters)?),
        None => None,
    };
    Ok(Resources {
        embeddings,
        clusters,
    })
}

fn parser_config(args: &ParserArgs, m: &Manifest) -> Result<ParserConfig> {
    let mut c = if m.switch(args.desk, "desk")? {
        ParserConfig::desk()
    } else {
        ParserConfig::default()
    };
    c.delexicalized = m.switch(args.delexicalized, "delexicalized")?;

    macro_rules! set {
        ($field:ident, $key:literal) => {
            if let Some(v) = m.value(args.$field, $key)? {
                c.$field = v;
            }
        };
    }
    set!(epochs, "epochs");
    set!(batch_size, "batch-size");
    set!(learning_rate, "learning-rate");
    set!(dropout, "dropout");
    set!(embed_dim, "embed-dim");
    set!(cluster_embed_dim, "cluster-embed-dim");
    set!(pos_embed_dim, "pos-embed-dim");
    set!(encoder_layers, "encoder-layers");
    set!(encoder_hidden, "encoder-hidden");
    set!(arc_mlp_dim, "arc-mlp-dim");
    set!(label_mlp_dim, "label-mlp-dim");
    set!(seed, "seed");

    c.validate().map_err(data)?;
    Ok(c)
}

fn codemix_config(
    input: &AlignmentInput,
    lambda: f64,
    seed: u64,
    m: &Manifest,
) -> Result<CodeMixConfig> {
    let config = CodeMixConfig {
        lambda,
        enable_deletion: !m.switch(input.no_delete, "no-delete")?,
        enable_reordering: !m.switch(input.no_reorder, "no-reorder")?,
        seed,
    };
    config.validate().map_err(data)?;
    Ok(config)
}

/// Source treebank, pairs and one alignment matrix per pair.
struct AlignedSource {
    source: Treebank,
    pairs: Vec<SentencePair>,
    matrices: Vec<AlignmentMatrix>,
}

fn load_aligned_source(input: &AlignmentInput, m: &Manifest) -> Result<AlignedSource> {
    let source = read_treebank(&m.required_path(input.source.clone(), "source")?)?;
    let pairs = read_with(&m.required_path(input.pairs.clone(), "pairs")?, read_pairs)?;

    let matrices = match (
        m.path(input.alignments.clone(), "alignments"),
        m.path(input.lexical_table.clone(), "lexical-table"),
    ) {
        (Some(path), _) => read_with(&path, load_matrix_file)?,
        (None, Some(path)) => {
            let table = read_with(&path, load_lexical_table)?;
            let smoothing = m
                .value(input.smoothing, "smoothing")?
                .unwrap_or(DEFAULT_SMOOTHING);
            pairs
                .iter()
                .map(|pair| derive_matrix(pair, &table, smoothing))
                .collect::<Result<Vec<_>, _>>()
                .map_err(data)?
        }
        (None, None) => {
            return Err(data_error(
                "either --alignments or --lexical-table is required",
            ))
        }
    };

    Ok(AlignedSource {
        source,
        pairs,
        matrices,
    })
}

fn stats_summary(stats: &TranslationStats) -> String {
    let mut out = String::new();
    writeln!(out, "lambda              {:.2}", stats.lambda).unwrap();
    writeln!(
        out,
        "trees               {} ({} translated, {} unmatched)",
        stats.trees, stats.translated, stats.unmatched
    )
    .unwrap();
    writeln!(out, "source tokens       {}", stats.source_tokens).unwrap();
    writeln!(out, "output tokens       {}", stats.output_tokens).unwrap();
    writeln!(
        out,
        "substituted tokens  {} (ratio {:.4})",
        stats.substituted_tokens, stats.substitution_ratio
    )
    .unwrap();
    writeln!(
        out,
        "deleted tokens      {} (ratio {:.4})",
        stats.deleted_tokens, stats.deletion_ratio
    )
    .unwrap();
    writeln!(out, "target spans        {}", stats.spans).unwrap();
    out
}

fn translate_cmd(args: TranslateArgs, m: &Manifest) -> Result<()> {
    let lambda = m.value(args.lambda, "lambda")?.unwrap_or(DEFAULT_LAMBDA);
    let seed = m.value(args.seed, "seed")?.unwrap_or(0);
    let config = codemix_config(&args.input, lambda, seed, m)?;
    let input = load_aligned_source(&args.input, m)?;

    let (mixed, stats) =
        translate_treebank(&input.source, &input.matrices, &input.pairs, &config).map_err(data)?;

    let out = m.path(args.out, "out");
    write_output(out.as_deref(), to_conllu_string(&mixed).as_bytes())?;
    if let Some(path) = m.path(args.stats, "stats") {
        let json = serde_json::to_string_pretty(&stats)?;
        write_output(Some(&path), format!("{}\n", json).as_bytes())?;
    }
    eprint!("{}", stats_summary(&stats));
    Ok(())
}

fn mix_cmd(args: MixArgs) -> Result<()> {
    let a = read_treebank(&args.first)?;
    let b = read_treebank(&args.second)?;
    let mixed = mix_corpora(&a, &b);
    write_output(args.out.as_deref(), to_conllu_string(&mixed).as_bytes())
}

fn train_cmd(args: TrainArgs, m: &Manifest) -> Result<()> {
    let config = parser_config(&args.parser, m)?;
    let treebank = read_treebank(&m.required_path(args.train, "train")?)?;
    let model_path = m.required_path(args.model, "model")?;
    let resources = resolve_resources(&args.resources, m)?;

    let (model, log) = train(&treebank, &resources, &config).map_err(data)?;

    let mut bytes = Vec::new();
    save_model(&model, &mut bytes).context("serializing the model")?;
    write_output(Some(&model_path), &bytes)?;

    let last = log.epoch_losses.last().copied().unwrap_or(f64::NAN);
    println!(
        "trained on {} sentences for {} epochs; final loss {:.4}; model saved to {}",
        treebank.len(),
        config.epochs,
        last,
        model_path.display()
    );
    Ok(())
}

fn parse_cmd(args: ParseArgs, m: &Manifest) -> Result<()> {
    let model_path = m.required_path(args.model, "model")?;
    let model = read_with(&model_path, load_model)?;
    let input = read_treebank(&m.required_path(args.input, "input")?)?;
    let parsed = parse(&input, &model);
    write_output(
        m.path(args.out, "out").as_deref(),
        to_conllu_string(&parsed).as_bytes(),
    )
}

fn eval_cmd(args: EvalArgs) -> Result<()> {
    let gold = read_treebank(&args.gold)?;
    let predicted = read_treebank(&args.predicted)?;
    let report = score(&gold, &predicted).map_err(data)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.to_table());
    }
    Ok(())
}

struct Experiment {
    input: AlignedSource,
    eval: Treebank,
    resources: Resources,
    parser: ParserConfig,
    trials: usize,
    jobs: usize,
}

impl Experiment {
    fn load(args: &ExperimentArgs, m: &Manifest) -> Result<Self> {
        let parser = parser_config(&args.parser, m)?;
        let input = load_aligned_source(&args.input, m)?;
        let eval = read_treebank(&m.required_path(args.eval.clone(), "eval")?)?;
        let resources = resolve_resources(&args.resources, m)?;
        let trials = m.value(args.trials, "trials")?.unwrap_or(1);
        let jobs = m.value(args.jobs, "jobs")?.unwrap_or(1);
        if trials == 0 || jobs == 0 {
            return Err(data_error("--trials and --jobs must be at least 1"));
        }
        Ok(Experiment {
            input,
            eval,
            resources,
            parser,
            trials,
            jobs,
        })
    }

    fn data(&self) -> ExperimentData<'_> {
        ExperimentData {
            source: &self.input.source,
            matrices: &self.input.matrices,
            pairs: &self.input.pairs,
            resources: &self.resources,
            eval: &self.eval,
        }
    }
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|item| {
            item.trim()
                .parse::<f64>()
                .map_err(|_| data_error(format!("invalid ratio '{}' in --grid", item.trim())))
        })
        .collect()
}

fn default_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

fn sweep_cmd(args: SweepArgs, m: &Manifest) -> Result<()> {
    let grid = match m.value(args.grid, "grid")? {
        Some(text) => parse_grid(&text)?,
        None => default_grid(),
    };
    let exp = Experiment::load(&args.experiment, m)?;
    let codemix = codemix_config(&args.experiment.input, DEFAULT_LAMBDA, 0, m)?;
    for &lambda in &grid {
        CodeMixConfig::new(lambda).map_err(data)?;
    }

    let config = SweepConfig {
        grid,
        trials: exp.trials,
        codemix,
        parser: exp.parser.clone(),
        jobs: exp.jobs,
    };
    let report = sweep_lambda(&exp.data(), &config).map_err(data)?;

    let mut csv = Vec::new();
    write_sweep_csv(&report, &mut csv)?;
    let out = m.path(args.out, "out");
    write_output(out.as_deref(), &csv)?;
    if out.is_some() {
        print!("{}", report.to_table());
    } else {
        eprint!("{}", report.to_table());
    }
    Ok(())
}

fn ablate_cmd(args: AblateArgs, m: &Manifest) -> Result<()> {
    let lambda = m.value(args.lambda, "lambda")?.unwrap_or(DEFAULT_LAMBDA);
    CodeMixConfig::new(lambda).map_err(data)?;
    let exp = Experiment::load(&args.experiment, m)?;
    let rows = ablation(&exp.data(), lambda, exp.trials, &exp.parser, exp.jobs).map_err(data)?;

    print!("{}", ablation_table(&rows));
    if let Some(path) = m.path(args.out, "out") {
        let json = serde_json::to_string_pretty(&rows)?;
        write_output(Some(&path), format!("{}\n", json).as_bytes())?;
    }
    Ok(())
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    write_output(Some(&path), bytes)?;
    Ok(path)
}

fn synth_cmd(args: SynthArgs, m: &Manifest) -> Result<()> {
    let dir = m.required_path(args.out_dir, "out-dir")?;
    let train_size = m.value(args.train_size, "train-size")?.unwrap_or(300);
    let eval_size = m.value(args.eval_size, "eval-size")?.unwrap_or(100);
    let noise = m.value(args.noise, "noise")?.unwrap_or(0.2);
    let dim = m.value(args.embed_dim, "embed-dim")?.unwrap_or(50);
    let seed = m.value(args.seed, "seed")?.unwrap_or(1);
    if !(0.0..=1.0).contains(&noise) {
        return Err(data_error(format!("--noise {} is outside [0, 1]", noise)));
    }
    if train_size == 0 || eval_size == 0 || dim == 0 {
        return Err(data_error("sizes and --embed-dim must be at least 1"));
    }
    fs::create_dir_all(&dir).map_err(|err| data_error(format!("{}: {}", dir.display(), err)))?;

    let language = SyntheticLanguage::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corpus = language.corpus(&mut rng, "train-", train_size, noise);
    let held_out = language.corpus(&mut rng, "eval-", eval_size, 0.0);
    let embeddings = language.embeddings(&mut rng, dim);
    let clusters = language.clusters();

    let mut buffer = Vec::new();
    write_file(
        &dir,
        "source.conllu",
        to_conllu_string(&corpus.source).as_bytes(),
    )?;
    write_file(
        &dir,
        "target.conllu",
        to_conllu_string(&corpus.target).as_bytes(),
    )?;
    write_file(
        &dir,
        "eval.conllu",
        to_conllu_string(&held_out.target).as_bytes(),
    )?;
    write_pairs(&corpus.pairs, &mut buffer)?;
    write_file(&dir, "pairs.tsv", &buffer)?;
    buffer.clear();
    write_matrix_file(&corpus.matrices, &mut buffer)?;
    write_file(&dir, "alignments.jsonl", &buffer)?;
    buffer.clear();
    write_embeddings(&embeddings, &mut buffer)?;
    write_file(&dir, "embeddings.vec", &buffer)?;
    buffer.clear();
    write_clusters(&clusters, &mut buffer)?;
    write_file(&dir, "clusters.tsv", &buffer)?;

    let manifest = "\
source = source.conllu
pairs = pairs.tsv
alignments = alignments.jsonl
eval = eval.conllu
embeddings = embeddings.vec
clusters = clusters.tsv
";
    write_file(&dir, "manifest.txt", manifest.as_bytes())?;

    println!(
        "{} training pairs ({} of {} target words with corrupted alignments), {} evaluation trees, written to {}",
        corpus.source.len(),
        corpus.noisy_words,
        corpus.target_words,
        held_out.target.len(),
        dir.display()
    );
    Ok(())
}
