use std::collections::BTreeMap;

use crate::alignment::{AlignmentMatrix, SentencePair};
use crate::conllu::{DependencyTree, Lang, Token};

use super::select::{select, Candidate};
use super::TranslateError;

/// A target word chosen to replace a source word.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Substitution {
    /// 1-based position `j` in the translation.
    pub target: usize,
    /// 1-based position `a_j` of the best-aligned source word.
    pub source: usize,
    /// Alignment probability `p_j`.
    pub prob: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SubstitutionPlan {
    /// Chosen substitutions, ordered by target position.
    pub chosen: Vec<Substitution>,
    /// Source position to the ascending target positions replacing it.
    pub groups: BTreeMap<usize, Vec<usize>>,
}

impl SubstitutionPlan {
    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    /// The group member that takes over the source word's dependents:
    /// the most probable one, ties going to the smallest target position.
    pub fn anchor(&self, source: usize) -> Option<usize> {
        let members = self.groups.get(&source)?;
        let prob = |j: usize| {
            self.chosen
                .iter()
                .find(|s| s.target == j)
                .map(|s| s.prob)
                .unwrap_or(f64::NEG_INFINITY)
        };

        let mut best = members[0];
        for &j in &members[1..] {
            if prob(j) > prob(best) {
                best = j;
            }
        }
        Some(best)
    }
}

/// Choose the target words to substitute.
///
/// Null-aligned target words are never eligible, but the quota is
/// computed over all `m` target words.
pub fn plan_substitution(
    tree: &DependencyTree,
    matrix: &AlignmentMatrix,
    lambda: f64,
) -> Result<SubstitutionPlan, TranslateError> {
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

    let best = matrix.best_alignments();
    let pool: Vec<Candidate> = best
        .iter()
        .enumerate()
        .filter(|(_, &(source, _))| source > 0)
        .map(|(k, &(_, prob))| Candidate::new(k + 1, prob))
        .collect();

    let mut chosen: Vec<Substitution> = select(&pool, lambda, matrix.m())?
        .into_iter()
        .map(|c| Substitution {
            target: c.index,
            source: best[c.index - 1].0,
            prob: c.value,
        })
        .collect();
    chosen.sort_by_key(|s| s.target);

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for s in &chosen {
        groups.entry(s.source).or_default().push(s.target);
    }

    Ok(SubstitutionPlan { chosen, groups })
}

/// Result of substitution: the code-mixed tree and, for every source
/// position, the id of the token that now stands in for it.
#[derive(Clone, Debug, PartialEq)]
pub struct Substituted {
    pub tree: DependencyTree,
    pub positions: Vec<usize>,
}

/// Replace source words by their chosen translations.
///
/// A source word replaced by a single target word keeps its position
/// and arcs. A source word replaced by several target words is expanded
/// in place into all of them (in translation order); the anchor takes
/// over the source word's head and dependents, and every other member
/// attaches to the source word's head with the same label. If the
/// source word was the root, the other members attach to the anchor.
pub fn apply_substitution(
    tree: &DependencyTree,
    plan: &SubstitutionPlan,
    pair: &SentencePair,
) -> Result<Substituted, TranslateError> {
    let n = tree.len();
    for s in &plan.chosen {
        if s.source == 0 || s.source > n || s.target == 0 || s.target > pair.target.len() {
            return Err(TranslateError::PlanOutOfRange {
                sent_id: tree.sent_id.clone(),
                source_word: s.source,
                target_word: s.target,
            });
        }
    }

    // New ids: a group of k members occupies k consecutive slots.
    let mut positions = vec![0; n];
    let mut anchors = vec![0; n];
    let mut next = 1;
    for i in 1..=n {
        match plan.groups.get(&i) {
            None => {
                positions[i - 1] = next;
                next += 1;
            }
            Some(members) => {
                let anchor = plan.anchor(i).expect("group exists");
                let offset = members.iter().position(|&j| j == anchor).unwrap();
                anchors[i - 1] = anchor;
                positions[i - 1] = next + offset;
                next += members.len();
            }
        }
    }
    let remap = |head: usize| if head == 0 { 0 } else { positions[head - 1] };

    let mut tokens = Vec::with_capacity(next - 1);
    for (k, source) in tree.tokens.iter().enumerate() {
        let i = k + 1;
        let Some(members) = plan.groups.get(&i) else {
            tokens.push(Token {
                head: remap(source.head),
                ..source.clone()
            });
            continue;
        };

        for &j in members {
            let head = if j == anchors[k] || source.head != 0 {
                remap(source.head)
            } else {
                positions[k]
            };
            tokens.push(Token {
                form: pair.target[j - 1].clone(),
                upos: source.upos.clone(),
                cluster: None,
                head,
                deprel: source.deprel.clone(),
                lang: Lang::Target { origin_index: j },
            });
        }
    }

    let result = DependencyTree::new(tree.sent_id.clone(), tokens);
    super::check_output(&result)?;

    Ok(Substituted {
        tree: result,
        positions,
    })
}
