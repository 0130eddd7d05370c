use std::fmt::Write as _;
use std::io::{self, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::alignment::{AlignmentMatrix, SentencePair};
use crate::conllu::Treebank;
use crate::parser::{parse, train, ParserConfig};
use crate::resources::Resources;
use crate::translate::{translate_treebank, CodeMixConfig};

use super::{score, EvalError, MetricsReport};

/// Inputs shared by every run of an experiment.
#[derive(Clone, Copy, Debug)]
pub struct ExperimentData<'a> {
    pub source: &'a Treebank,
    pub matrices: &'a [AlignmentMatrix],
    pub pairs: &'a [SentencePair],
    pub resources: &'a Resources,
    /// Gold target-language trees to evaluate on.
    pub eval: &'a Treebank,
}

/// Translate the source treebank, train on the result, and score the
/// parser on the evaluation trees.
pub fn run_trial(
    data: &ExperimentData,
    codemix: &CodeMixConfig,
    parser: &ParserConfig,
) -> Result<MetricsReport, EvalError> {
    let (mixed, stats) = translate_treebank(data.source, data.matrices, data.pairs, codemix)?;
    log::info!(
        "lambda {}: {} tokens, {:.1}% target, {} deleted",
        codemix.lambda,
        stats.output_tokens,
        100.0 * stats.substitution_ratio,
        stats.deleted_tokens
    );
    let (model, _) = train(&mixed, data.resources, parser)?;
    let predicted = parse(data.eval, &model);
    score(data.eval, &predicted)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub grid: Vec<f64>,
    pub trials: usize,
    /// Deletion and reordering switches; the ratio comes from the grid.
    pub codemix: CodeMixConfig,
    /// Trial `t` trains with seed `parser.seed + t`.
    pub parser: ParserConfig,
    /// Worker threads; results do not depend on this.
    pub jobs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub lambda: f64,
    pub trial: usize,
    pub seed: u64,
    pub uas: f64,
    pub las: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub trials: usize,
    pub uas_mean: f64,
    pub uas_std: f64,
    pub las_mean: f64,
    pub las_std: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepReport {
    /// Grid order, then trial order.
    pub trials: Vec<TrialResult>,
    pub rows: Vec<SweepRow>,
}

/// Mean and sample standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run `f` on every task with up to `jobs` threads, keeping task order.
fn run_tasks<T, R, F>(tasks: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if jobs <= 1 || tasks.len() <= 1 {
        return tasks.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..tasks.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(tasks.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= tasks.len() {
                    break;
                }
                let result = f(&tasks[k]);
                results.lock().unwrap()[k] = Some(result);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every task ran"))
        .collect()
}

/// Translate, train and evaluate for every ratio of the grid, `trials`
/// times each.
pub fn sweep_lambda(data: &ExperimentData, config: &SweepConfig) -> Result<SweepReport, EvalError> {
    if config.trials == 0 || config.grid.is_empty() {
        return Err(EvalError::Config(
            "the sweep needs a ratio and a trial".into(),
        ));
    }

    let tasks: Vec<(f64, usize)> = config
        .grid
        .iter()
        .flat_map(|&lambda| (0..config.trials).map(move |t| (lambda, t)))
        .collect();

    let results = run_tasks(&tasks, config.jobs, |&(lambda, trial)| {
        let codemix = CodeMixConfig {
            lambda,
            ..config.codemix.clone()
        };
        let parser = ParserConfig {
            seed: config.parser.seed + trial as u64,
            ..config.parser.clone()
        };
        run_trial(data, &codemix, &parser).map(|report| TrialResult {
            lambda,
            trial,
            seed: parser.seed,
            uas: report.uas,
            las: report.las,
        })
    });
    let trials = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let rows = config
        .grid
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let chunk = &trials[k * config.trials..(k + 1) * config.trials];
            let uas: Vec<f64> = chunk.iter().map(|t| t.uas).collect();
            let las: Vec<f64> = chunk.iter().map(|t| t.las).collect();
            let (uas_mean, uas_std) = mean_std(&uas);
            let (las_mean, las_std) = mean_std(&las);
            SweepRow {
                lambda,
                trials: config.trials,
                uas_mean,
                uas_std,
                las_mean,
                las_std,
            }
        })
        .collect();

    Ok(SweepReport { trials, rows })
}

/// `lambda,trial,uas,las` with one line per trial.
pub fn write_sweep_csv<W: Write>(report: &SweepReport, mut write: W) -> io::Result<()> {
    writeln!(write, "lambda,trial,uas,las")?;
    for t in &report.trials {
        writeln!(write, "{},{},{:.4},{:.4}", t.lambda, t.trial, t.uas, t.las)?;
    }
    write.flush()
}

impl SweepReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:>6} {:>6} {:>14} {:>14}",
            "lambda", "trials", "UAS", "LAS"
        )
        .unwrap();
        for row in &self.rows {
            writeln!(
                out,
                "{:>6.2} {:>6} {:>7.2} ± {:<4.2} {:>7.2} ± {:<4.2}",
                row.lambda, row.trials, row.uas_mean, row.uas_std, row.las_mean, row.las_std
            )
            .unwrap();
        }
        out
    }
}

/// Row names and (deletion, reordering) switches of the ablation table.
pub const ABLATION_ROWS: [(&str, bool, bool); 4] = [
    ("Mix", true, true),
    ("-Sentence Reordering", true, false),
    ("-Word Deletion", false, true),
    ("-Both", false, false),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AblationRow {
    pub name: String,
    pub enable_deletion: bool,
    pub enable_reordering: bool,
    pub result: SweepRow,
}

/// The code-mixing pipeline at one ratio with deletion and reordering
/// switched off in turn.
pub fn ablation(
    data: &ExperimentData,
    lambda: f64,
    trials: usize,
    parser: &ParserConfig,
    jobs: usize,
) -> Result<Vec<AblationRow>, EvalError> {
    ABLATION_ROWS
        .iter()
        .map(|&(name, enable_deletion, enable_reordering)| {
            let config = SweepConfig {
                grid: vec![lambda],
                trials,
                codemix: CodeMixConfig {
                    lambda,
                    enable_deletion,
                    enable_reordering,
                    ..Default::default()
                },
                parser: parser.clone(),
                jobs,
            };
            let report = sweep_lambda(data, &config)?;
            Ok(AblationRow {
                name: name.to_owned(),
                enable_deletion,
                enable_reordering,
                result: report.rows.into_iter().next().unwrap(),
            })
        })
        .collect()
}

/// Ablation results as a plain-text table.
pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut out = String::new();
    writeln!(out, "{:<22} {:>8} {:>8}", "Model", "UAS", "LAS").unwrap();
    for row in rows {
        writeln!(
            out,
            "{:<22} {:>8.2} {:>8.2}",
            row.name, row.result.uas_mean, row.result.las_mean
        )
        .unwrap();
    }
    out
}
