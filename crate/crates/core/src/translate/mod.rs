//! Code-mixed tree translation.
//!
//! A source tree is partially translated in three steps:
//!
//! 1. substitution: the most confidently aligned target words replace
//!    their source words, keeping the source arcs;
//! 2. deletion: source words without any aligned target word are
//!    removed, lowest retention first;
//! 3. reordering: every contiguous run of target words is put into
//!    translation order.
//!
//! The ratio `lambda` controls how many words are substituted and
//! deleted: 0 leaves the source tree untouched, 1 translates every
//! confidently aligned word.

mod delete;
mod reorder;
mod select;
mod substitute;

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::alignment::{AlignmentMatrix, SentencePair};
use crate::conllu::{DependencyTree, Treebank, Violation};

pub use self::delete::{apply_deletion, plan_deletion, Deletion, DeletionPlan};
pub use self::reorder::reorder;
pub use self::select::{quota, select, Candidate};
pub use self::substitute::{
    apply_substitution, plan_substitution, Substituted, Substitution, SubstitutionPlan,
};

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("translation ratio {0} is outside [0, 1]")]
    InvalidRatio(f64),

    #[error("sentence {sent_id}: {message}")]
    Dimension { sent_id: String, message: String },

    #[error("sentence {sent_id}: plan references source word {source_word} / target word {target_word} out of range")]
    PlanOutOfRange {
        sent_id: String,
        source_word: usize,
        target_word: usize,
    },

    #[error("sentence {sent_id}: token {token} is the root and cannot be deleted")]
    RootDeletion { sent_id: String, token: usize },

    #[error("sentence {sent_id}: transformation produced an invalid tree: {violations:?}")]
    InvalidOutput {
        sent_id: String,
        violations: Vec<Violation>,
    },
}

impl TranslateError {
    fn dimension(sent_id: &str, message: impl Into<String>) -> Self {
        TranslateError::Dimension {
            sent_id: sent_id.to_owned(),
            message: message.into(),
        }
    }
}

fn check_output(tree: &DependencyTree) -> Result<(), TranslateError> {
    let violations = tree.validate();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(TranslateError::InvalidOutput {
            sent_id: tree.sent_id.clone(),
            violations,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodeMixConfig {
    pub lambda: f64,
    pub enable_deletion: bool,
    pub enable_reordering: bool,
    /// Reserved; the translation pipeline is deterministic.
    pub seed: u64,
}

impl CodeMixConfig {
    pub fn new(lambda: f64) -> Result<Self, TranslateError> {
        select::check_ratio(lambda)?;
        Ok(CodeMixConfig {
            lambda,
            ..Default::default()
        })
    }

    pub fn validate(&self) -> Result<(), TranslateError> {
        select::check_ratio(self.lambda)
    }
}

impl Default for CodeMixConfig {
    fn default() -> Self {
        CodeMixConfig {
            lambda: 0.7,
            enable_deletion: true,
            enable_reordering: true,
            seed: 0,
        }
    }
}

/// What happened to one sentence.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SentenceStats {
    pub sent_id: String,
    pub source_tokens: usize,
    pub target_words: usize,
    /// Target words whose best alignment is not the null word.
    pub candidates: usize,
    pub substituted: usize,
    /// Unaligned non-root source words.
    pub deletable: usize,
    pub deleted: usize,
    pub output_tokens: usize,
    pub spans: usize,
}

/// Translate one tree.
pub fn translate_tree(
    tree: &DependencyTree,
    matrix: &AlignmentMatrix,
    pair: &SentencePair,
    config: &CodeMixConfig,
) -> Result<DependencyTree, TranslateError> {
    translate_tree_with_stats(tree, matrix, pair, config).map(|(tree, _)| tree)
}

/// Translate one tree and report what was done.
pub fn translate_tree_with_stats(
    tree: &DependencyTree,
    matrix: &AlignmentMatrix,
    pair: &SentencePair,
    config: &CodeMixConfig,
) -> Result<(DependencyTree, SentenceStats), TranslateError> {
    config.validate()?;
    check_dimensions(tree, matrix, pair)?;

    let sub_plan = plan_substitution(tree, matrix, config.lambda)?;
    let substituted = apply_substitution(tree, &sub_plan, pair)?;

    let mut stats = SentenceStats {
        sent_id: tree.sent_id.clone(),
        source_tokens: tree.len(),
        target_words: matrix.m(),
        candidates: matrix
            .best_alignments()
            .iter()
            .filter(|(a, _)| *a > 0)
            .count(),
        substituted: sub_plan.chosen.len(),
        ..Default::default()
    };

    let mut mixed = substituted.tree;
    if config.enable_deletion {
        let del_plan = plan_deletion(tree, matrix, config.lambda)?;
        stats.deletable = plan_deletion(tree, matrix, 1.0)?.doomed.len();
        stats.deleted = del_plan.doomed.len();
        mixed = apply_deletion(&mixed, &del_plan.relocate(&substituted.positions))?;
    }

    if config.enable_reordering {
        mixed = reorder(&mixed)?;
    }

    stats.output_tokens = mixed.len();
    stats.spans = mixed.target_spans();
    Ok((mixed, stats))
}

fn check_dimensions(
    tree: &DependencyTree,
    matrix: &AlignmentMatrix,
    pair: &SentencePair,
) -> Result<(), TranslateError> {
    if pair.source.len() != tree.len() {
        return Err(TranslateError::dimension(
            &tree.sent_id,
            format!(
                "pair {} has {} source tokens, tree has {}",
                pair.pair_id,
                pair.source.len(),
                tree.len()
            ),
        ));
    }
    if matrix.n() != tree.len() || matrix.m() != pair.target.len() {
        return Err(TranslateError::dimension(
            &tree.sent_id,
            format!(
                "alignment matrix is {}x{}, expected {}x{}",
                matrix.n() + 1,
                matrix.m(),
                tree.len() + 1,
                pair.target.len()
            ),
        ));
    }
    Ok(())
}

/// Summary of a treebank translation.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TranslationStats {
    pub lambda: f64,
    pub trees: usize,
    pub translated: usize,
    /// Trees copied unchanged because no pair or matrix matched.
    pub unmatched: usize,
    pub source_tokens: usize,
    pub output_tokens: usize,
    pub substituted_tokens: usize,
    pub deleted_tokens: usize,
    pub spans: usize,
    /// Target-language tokens over output tokens.
    pub substitution_ratio: f64,
    /// Deleted tokens over source tokens.
    pub deletion_ratio: f64,
    pub sentences: Vec<SentenceStats>,
}

/// Translate every tree of a treebank that has a pair and a matrix with
/// its `sent_id`. Other trees are copied through and counted as
/// unmatched.
pub fn translate_treebank(
    treebank: &Treebank,
    matrices: &[AlignmentMatrix],
    pairs: &[SentencePair],
    config: &CodeMixConfig,
) -> Result<(Treebank, TranslationStats), TranslateError> {
    config.validate()?;

    let matrices: HashMap<&str, &AlignmentMatrix> =
        matrices.iter().map(|m| (m.pair_id(), m)).collect();
    let pairs: HashMap<&str, &SentencePair> =
        pairs.iter().map(|p| (p.pair_id.as_str(), p)).collect();

    let mut stats = TranslationStats {
        lambda: config.lambda,
        trees: treebank.len(),
        ..Default::default()
    };
    let mut trees = Vec::with_capacity(treebank.len());

    for tree in treebank.trees() {
        let id = tree.sent_id.as_str();
        stats.source_tokens += tree.len();

        let (Some(matrix), Some(pair)) = (matrices.get(id), pairs.get(id)) else {
            stats.unmatched += 1;
            stats.output_tokens += tree.len();
            stats.substituted_tokens += tree.target_count();
            stats.spans += tree.target_spans();
            trees.push(tree.clone());
            continue;
        };

        let (mixed, sentence) = translate_tree_with_stats(tree, matrix, pair, config)?;
        stats.translated += 1;
        stats.output_tokens += mixed.len();
        stats.substituted_tokens += mixed.target_count();
        stats.deleted_tokens += sentence.deleted;
        stats.spans += sentence.spans;
        stats.sentences.push(sentence);
        trees.push(mixed);
    }

    if stats.unmatched > 0 {
        log::warn!(
            "{} of {} trees have no matching pair/alignment and were copied unchanged",
            stats.unmatched,
            stats.trees
        );
    }

    if stats.output_tokens > 0 {
        stats.substitution_ratio = stats.substituted_tokens as f64 / stats.output_tokens as f64;
    }
    if stats.source_tokens > 0 {
        stats.deletion_ratio = stats.deleted_tokens as f64 / stats.source_tokens as f64;
    }

    Ok((Treebank::new(trees), stats))
}

/// Concatenate two treebanks (a then b).
pub fn mix_corpora(a: &Treebank, b: &Treebank) -> Treebank {
    a.concat(b)
}
