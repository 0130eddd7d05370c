use crate::alignment::AlignmentMatrix;
use crate::conllu::{DependencyTree, Token};

use super::select::{select, Candidate};
use super::TranslateError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Deletion {
    /// 1-based token id.
    pub index: usize,
    /// Retention score `r_i`.
    pub retention: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeletionPlan {
    /// Tokens to delete, lowest retention first.
    pub doomed: Vec<Deletion>,
}

impl DeletionPlan {
    pub fn is_empty(&self) -> bool {
        self.doomed.is_empty()
    }

    /// Map source positions to token ids of a rewritten tree.
    pub fn relocate(&self, positions: &[usize]) -> DeletionPlan {
        DeletionPlan {
            doomed: self
                .doomed
                .iter()
                .map(|d| Deletion {
                    index: positions[d.index - 1],
                    retention: d.retention,
                })
                .collect(),
        }
    }
}

/// Choose unaligned source words to delete.
///
/// Candidates are the source words that are nobody's best alignment,
/// minus the root. The lowest-retention `ceil(|D| * lambda)` are chosen.
/// Indices refer to the source tree.
pub fn plan_deletion(
    tree: &DependencyTree,
    matrix: &AlignmentMatrix,
    lambda: f64,
) -> Result<DeletionPlan, TranslateError> {
    if matrix.n() != tree.len() {
        return Err(TranslateError::dimension(
            &tree.sent_id,
            format!(
                "alignment matrix has {} source words, tree has {} tokens",
                matrix.n(),
                tree.len()
            ),
        ));
    }

    let n = tree.len();
    let mut aligned = vec![false; n + 1];
    for (source, _) in matrix.best_alignments() {
        aligned[source] = true;
    }
    let root = tree.root();

    let pool: Vec<Candidate> = (1..=n)
        .filter(|&i| !aligned[i] && Some(i) != root)
        .map(|i| Candidate::new(i, -matrix.retention(i)))
        .collect();

    let doomed = select(&pool, lambda, pool.len())?
        .into_iter()
        .map(|c| Deletion {
            index: c.index,
            retention: -c.value,
        })
        .collect();

    Ok(DeletionPlan { doomed })
}

/// Remove the doomed tokens.
///
/// Dependents of a removed token are reattached to its nearest
/// surviving ancestor and keep their own labels.
pub fn apply_deletion(
    tree: &DependencyTree,
    plan: &DeletionPlan,
) -> Result<DependencyTree, TranslateError> {
    let n = tree.len();
    let mut doomed = vec![false; n + 1];
    for d in &plan.doomed {
        if d.index == 0 || d.index > n {
            return Err(TranslateError::PlanOutOfRange {
                sent_id: tree.sent_id.clone(),
                source_word: d.index,
                target_word: 0,
            });
        }
        if tree.token(d.index).head == 0 {
            return Err(TranslateError::RootDeletion {
                sent_id: tree.sent_id.clone(),
                token: d.index,
            });
        }
        doomed[d.index] = true;
    }

    let mut new_ids = vec![0; n + 1];
    let mut next = 1;
    for i in 1..=n {
        if !doomed[i] {
            new_ids[i] = next;
            next += 1;
        }
    }

    let tokens: Vec<Token> = tree
        .tokens
        .iter()
        .enumerate()
        .filter(|(k, _)| !doomed[k + 1])
        .map(|(_, token)| {
            let mut head = token.head;
            // Terminates: the tree is acyclic and its root survives.
            while head != 0 && doomed[head] {
                head = tree.token(head).head;
            }
            Token {
                head: new_ids[head],
                ..token.clone()
            }
        })
        .collect();

    let result = DependencyTree::new(tree.sent_id.clone(), tokens);
    super::check_output(&result)?;
    Ok(result)
}
