//! Synthetic data: random trees and alignments for property tests, and
//! a small artificial language pair for transfer experiments.

mod language;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::alignment::{AlignmentMatrix, SentencePair};
use crate::conllu::{DependencyTree, Token};

pub use self::language::{ParallelCorpus, SyntheticLanguage};

const LABELS: &[&str] = &["nsubj", "obj", "amod", "det", "advmod", "case", "obl"];
const TAGS: &[&str] = &["NOUN", "VERB", "ADJ", "DET", "ADV", "ADP", "PUNCT"];

/// A random tree with `n` tokens. Every labeled tree shape can occur.
pub fn random_tree<R: Rng>(rng: &mut R, sent_id: &str, n: usize) -> DependencyTree {
    assert!(n > 0, "a tree needs at least one token");

    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);

    let mut heads = vec![0; n + 1];
    for k in 1..n {
        heads[order[k]] = order[rng.gen_range(0..k)];
    }

    let tokens = (1..=n)
        .map(|i| {
            let deprel = if heads[i] == 0 {
                "root"
            } else {
                LABELS.choose(rng).unwrap()
            };
            Token::new(
                format!("e{}", i),
                *TAGS.choose(rng).unwrap(),
                heads[i],
                deprel,
            )
        })
        .collect();

    DependencyTree::new(sent_id, tokens)
}

/// A random alignment matrix for `n` source and `m` target words.
///
/// Columns mix a few features that stress the translation code: exact
/// zeros, ties for the maximum, and a dominant null word.
pub fn random_matrix<R: Rng>(rng: &mut R, pair_id: &str, n: usize, m: usize) -> AlignmentMatrix {
    let mut probs = Array2::zeros((n + 1, m));
    for j in 0..m {
        let mut column: Vec<f64> = (0..=n)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    0.0
                } else {
                    rng.gen_range(0.01..1.0)
                }
            })
            .collect();

        if rng.gen_bool(0.15) {
            column[0] = 3.0;
        }
        if n >= 2 && rng.gen_bool(0.15) {
            let a = rng.gen_range(0..=n);
            let b = rng.gen_range(0..=n);
            column[a] = 2.0;
            column[b] = 2.0;
        }
        if column.iter().all(|&p| p == 0.0) {
            column[rng.gen_range(0..=n)] = 1.0;
        }

        let total: f64 = column.iter().sum();
        for (i, p) in column.into_iter().enumerate() {
            probs[[i, j]] = p / total;
        }
    }
    AlignmentMatrix::new(pair_id, probs).expect("columns are normalized")
}

/// One random (tree, sentence pair, alignment) triple.
#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub tree: DependencyTree,
    pub pair: SentencePair,
    pub matrix: AlignmentMatrix,
}

/// A random instance with up to `max_source` source and `max_target`
/// target words. Source forms are `e1..en`, target forms `f1..fm`.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    id: &str,
    max_source: usize,
    max_target: usize,
) -> RandomInstance {
    let n = rng.gen_range(1..=max_source);
    let m = rng.gen_range(1..=max_target);

    let tree = random_tree(rng, id, n);
    let pair = SentencePair::new(
        id,
        tree.forms()
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>(),
        (1..=m).map(|j| format!("f{}", j)).collect::<Vec<_>>(),
    );
    let matrix = random_matrix(rng, id, n, m);

    RandomInstance { tree, pair, matrix }
}
