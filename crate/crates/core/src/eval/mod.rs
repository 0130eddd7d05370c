//! Attachment scores, breakdowns by POS and arc length, and the
//! experiment harnesses built on them.

mod experiment;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::conllu::{DependencyTree, Token, Treebank};
use crate::parser::ParserError;
use crate::translate::TranslateError;

pub use self::experiment::{
    ablation, ablation_table, run_trial, sweep_lambda, write_sweep_csv, AblationRow,
    ExperimentData, SweepConfig, SweepReport, SweepRow, TrialResult, ABLATION_ROWS,
};

/// Gold tag of tokens excluded from scoring.
pub const PUNCT: &str = "PUNCT";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold has {gold} sentences, prediction has {pred}")]
    SentenceCount { gold: usize, pred: usize },

    #[error("sentence {sent_id}: gold has {gold} tokens, prediction has {pred}")]
    Length {
        sent_id: String,
        gold: usize,
        pred: usize,
    },

    #[error(transparent)]
    Translate(#[from] TranslateError),

    #[error(transparent)]
    Parser(#[from] ParserError),

    #[error("{0}")]
    Config(String),
}

/// Arc-length buckets: `upper[k]` is the inclusive upper bound of bucket
/// `k`, and one more open bucket follows. Root arcs have their own bucket.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceBuckets {
    pub upper: Vec<usize>,
}

impl Default for DistanceBuckets {
    fn default() -> Self {
        DistanceBuckets {
            upper: vec![1, 2, 6],
        }
    }
}

impl DistanceBuckets {
    pub const ROOT: &'static str = "root";

    /// Bucket names in report order, root last.
    pub fn names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.upper.len() + 2);
        let mut lower = 1;
        for &upper in &self.upper {
            names.push(if lower == upper {
                upper.to_string()
            } else {
                format!("{}-{}", lower, upper)
            });
            lower = upper + 1;
        }
        names.push(format!(">={}", lower));
        names.push(Self::ROOT.to_owned());
        names
    }

    /// Bucket index of an arc from `head` to `dependent` (1-based ids,
    /// head 0 for the root).
    pub fn bucket(&self, head: usize, dependent: usize) -> usize {
        if head == 0 {
            return self.upper.len() + 1;
        }
        let distance = head.abs_diff(dependent);
        self.upper
            .iter()
            .position(|&upper| distance <= upper)
            .unwrap_or(self.upper.len())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    pub uas: f64,
    pub las: f64,
    pub total_tokens: usize,
    pub evaluated_tokens: usize,
    pub excluded_tokens: usize,
    pub correct_heads: usize,
    pub correct_labeled: usize,
    pub per_pos_f: BTreeMap<String, f64>,
    /// Bucket name and F-score, for buckets with any gold or predicted arc.
    pub per_distance_f: Vec<(String, f64)>,
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Aligned (gold, predicted) tokens of scored sentences.
fn aligned<'a>(
    gold: &'a Treebank,
    pred: &'a Treebank,
) -> Result<Vec<(&'a DependencyTree, &'a DependencyTree)>, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::SentenceCount {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    gold.trees()
        .iter()
        .zip(pred.trees())
        .map(|(g, p)| {
            if g.len() == p.len() {
                Ok((g, p))
            } else {
                Err(EvalError::Length {
                    sent_id: g.sent_id.clone(),
                    gold: g.len(),
                    pred: p.len(),
                })
            }
        })
        .collect()
}

fn scored_tokens<'a>(
    pairs: &'a [(&'a DependencyTree, &'a DependencyTree)],
) -> impl Iterator<Item = (usize, &'a Token, &'a Token)> + 'a {
    pairs.iter().flat_map(|(g, p)| {
        g.tokens
            .iter()
            .zip(&p.tokens)
            .enumerate()
            .filter(|(_, (gt, _))| gt.upos != PUNCT)
            .map(|(k, (gt, pt))| (k + 1, gt, pt))
    })
}

fn labeled_correct(gold: &Token, pred: &Token) -> bool {
    gold.head == pred.head && gold.deprel == pred.deprel
}

/// UAS and LAS over tokens whose gold tag is not punctuation, with the
/// per-POS and per-distance breakdowns.
pub fn score(gold: &Treebank, pred: &Treebank) -> Result<MetricsReport, EvalError> {
    let pairs = aligned(gold, pred)?;
    let mut report = MetricsReport::default();
    for (g, _) in &pairs {
        report.total_tokens += g.len();
    }
    for (_, gt, pt) in scored_tokens(&pairs) {
        report.evaluated_tokens += 1;
        if gt.head == pt.head {
            report.correct_heads += 1;
            if gt.deprel == pt.deprel {
                report.correct_labeled += 1;
            }
        }
    }
    report.excluded_tokens = report.total_tokens - report.evaluated_tokens;
    report.uas = percent(report.correct_heads, report.evaluated_tokens);
    report.las = percent(report.correct_labeled, report.evaluated_tokens);
    report.per_pos_f = f_by_pos(gold, pred)?;
    report.per_distance_f = f_by_distance(gold, pred)?;
    Ok(report)
}

/// Labeled F-score per gold tag. Tags are given rather than predicted,
/// so precision equals recall and the score is per-tag labeled accuracy.
pub fn f_by_pos(gold: &Treebank, pred: &Treebank) -> Result<BTreeMap<String, f64>, EvalError> {
    let pairs = aligned(gold, pred)?;
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (_, gt, pt) in scored_tokens(&pairs) {
        let entry = counts.entry(gt.upos.clone()).or_default();
        entry.1 += 1;
        if labeled_correct(gt, pt) {
            entry.0 += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(tag, (correct, total))| (tag, percent(correct, total)))
        .collect())
}

pub fn f_by_distance(gold: &Treebank, pred: &Treebank) -> Result<Vec<(String, f64)>, EvalError> {
    f_by_distance_with(gold, pred, &DistanceBuckets::default())
}

/// Labeled F-score per arc-length bucket. Recall counts gold arcs by
/// their bucket, precision counts predicted arcs by theirs.
pub fn f_by_distance_with(
    gold: &Treebank,
    pred: &Treebank,
    buckets: &DistanceBuckets,
) -> Result<Vec<(String, f64)>, EvalError> {
    let pairs = aligned(gold, pred)?;
    let names = buckets.names();
    let mut gold_counts = vec![0usize; names.len()];
    let mut pred_counts = vec![0usize; names.len()];
    let mut correct = vec![0usize; names.len()];

    for (id, gt, pt) in scored_tokens(&pairs) {
        let gb = buckets.bucket(gt.head, id);
        gold_counts[gb] += 1;
        pred_counts[buckets.bucket(pt.head, id)] += 1;
        if labeled_correct(gt, pt) {
            correct[gb] += 1;
        }
    }

    Ok(names
        .into_iter()
        .enumerate()
        .filter(|&(b, _)| gold_counts[b] + pred_counts[b] > 0)
        .map(|(b, name)| {
            let precision = percent(correct[b], pred_counts[b]);
            let recall = percent(correct[b], gold_counts[b]);
            let f = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            (name, f)
        })
        .collect())
}

/// Every token headed by its left neighbour; the first token is the
/// root. Labels are copied from the input.
pub fn right_branching(treebank: &Treebank) -> Treebank {
    treebank
        .trees()
        .iter()
        .map(|tree| {
            let tokens = tree
                .tokens
                .iter()
                .enumerate()
                .map(|(k, t)| Token {
                    head: k,
                    deprel: if k == 0 {
                        "root".into()
                    } else {
                        t.deprel.clone()
                    },
                    ..t.clone()
                })
                .collect();
            DependencyTree::new(tree.sent_id.clone(), tokens)
        })
        .collect()
}

impl MetricsReport {
    /// Plain-text table with two-decimal percentages.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<12} {:>8}", "metric", "score").unwrap();
        writeln!(out, "{:<12} {:>8.2}", "UAS", self.uas).unwrap();
        writeln!(out, "{:<12} {:>8.2}", "LAS", self.las).unwrap();
        writeln!(
            out,
            "tokens: {} evaluated, {} punctuation excluded",
            self.evaluated_tokens, self.excluded_tokens
        )
        .unwrap();

        writeln!(out, "\n{:<12} {:>8}", "POS", "F").unwrap();
        for (tag, f) in &self.per_pos_f {
            writeln!(out, "{:<12} {:>8.2}", tag, f).unwrap();
        }
        writeln!(out, "\n{:<12} {:>8}", "distance", "F").unwrap();
        for (bucket, f) in &self.per_distance_f {
            writeln!(out, "{:<12} {:>8.2}", bucket, f).unwrap();
        }
        out
    }
}
