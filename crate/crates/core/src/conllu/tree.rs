use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Language of a token in a (possibly code-mixed) sentence.
///
/// Target-language tokens always remember their position in the
/// machine-translated sentence, so a target token without an origin
/// cannot be constructed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lang {
    Source,
    Target { origin_index: usize },
}

impl Lang {
    pub fn is_target(self) -> bool {
        matches!(self, Lang::Target { .. })
    }

    pub fn origin_index(self) -> Option<usize> {
        match self {
            Lang::Source => None,
            Lang::Target { origin_index } => Some(origin_index),
        }
    }
}

/// A single token of a dependency tree.
///
/// Token ids are implicit: the token at vector position `k` has id
/// `k + 1`. `head` is 0 for the root's dependent on the virtual root.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub form: String,
    pub upos: String,
    pub cluster: Option<u32>,
    pub head: usize,
    pub deprel: String,
    pub lang: Lang,
}

impl Token {
    pub fn new(
        form: impl Into<String>,
        upos: impl Into<String>,
        head: usize,
        deprel: impl Into<String>,
    ) -> Self {
        Token {
            form: form.into(),
            upos: upos.into(),
            cluster: None,
            head,
            deprel: deprel.into(),
            lang: Lang::Source,
        }
    }

    pub fn with_lang(mut self, lang: Lang) -> Self {
        self.lang = lang;
        self
    }
}

/// A structural problem in a dependency tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// The tree has no tokens at all.
    Empty,
    HeadOutOfRange {
        token: usize,
        head: usize,
    },
    SelfLoop {
        token: usize,
    },
    NoRoot,
    MultipleRoots {
        tokens: Vec<usize>,
    },
    /// A cycle in the head relation, reported at its smallest token id.
    Cycle {
        token: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "empty tree"),
            Violation::HeadOutOfRange { token, head } => {
                write!(f, "head-out-of-range at token {}: head {}", token, head)
            }
            Violation::SelfLoop { token } => write!(f, "self-loop at token {}", token),
            Violation::NoRoot => write!(f, "no-root"),
            Violation::MultipleRoots { tokens } => {
                write!(f, "multi-root at tokens {:?}", tokens)
            }
            Violation::Cycle { token } => write!(f, "cycle at token {}", token),
        }
    }
}

/// Check the structural invariants of a head array.
///
/// `heads[k]` is the head of token `k + 1`. The returned list is empty
/// iff the heads form a spanning arborescence rooted at the virtual
/// node 0 with exactly one child of the root.
pub fn validate_heads(heads: &[usize]) -> Vec<Violation> {
    let n = heads.len();
    if n == 0 {
        return vec![Violation::Empty];
    }

    let mut violations = Vec::new();
    let mut roots = Vec::new();
    for (k, &head) in heads.iter().enumerate() {
        let id = k + 1;
        if head > n {
            violations.push(Violation::HeadOutOfRange { token: id, head });
        } else if head == id {
            violations.push(Violation::SelfLoop { token: id });
        } else if head == 0 {
            roots.push(id);
        }
    }

    match roots.len() {
        0 => violations.push(Violation::NoRoot),
        1 => (),
        _ => violations.push(Violation::MultipleRoots { tokens: roots }),
    }

    // Self-loops and out-of-range heads are already reported; only
    // report cycles of length >= 2 among well-formed heads.
    const UNSEEN: u8 = 0;
    const ACTIVE: u8 = 1;
    const DONE: u8 = 2;
    let mut state = vec![UNSEEN; n + 1];
    state[0] = DONE;
    for start in 1..=n {
        let mut path = Vec::new();
        let mut node = start;
        while state[node] == UNSEEN {
            state[node] = ACTIVE;
            path.push(node);
            let head = heads[node - 1];
            if head > n || head == node {
                break;
            }
            node = head;
        }

        if state[node] == ACTIVE && heads[node - 1] != node && heads[node - 1] <= n {
            // `node` is on the current path: the cycle is the path suffix
            // starting at `node`.
            let pos = path.iter().position(|&v| v == node).unwrap();
            let smallest = path[pos..].iter().copied().min().unwrap();
            violations.push(Violation::Cycle { token: smallest });
        }

        for v in path {
            state[v] = DONE;
        }
    }

    violations
}

/// One sentence with its dependency structure.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DependencyTree {
    pub sent_id: String,
    pub tokens: Vec<Token>,
}

impl DependencyTree {
    pub fn new(sent_id: impl Into<String>, tokens: Vec<Token>) -> Self {
        DependencyTree {
            sent_id: sent_id.into(),
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token by 1-based id.
    pub fn token(&self, id: usize) -> &Token {
        &self.tokens[id - 1]
    }

    pub fn heads(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.head).collect()
    }

    pub fn deprels(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.deprel.as_str()).collect()
    }

    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }

    /// Id of the token attached to the virtual root, if there is exactly one.
    pub fn root(&self) -> Option<usize> {
        let mut roots = self
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.head == 0)
            .map(|(k, _)| k + 1);
        match (roots.next(), roots.next()) {
            (Some(root), None) => Some(root),
            _ => None,
        }
    }

    /// Ids of the direct dependents of `id` (0 for the virtual root).
    pub fn children(&self, id: usize) -> Vec<usize> {
        self.tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.head == id)
            .map(|(k, _)| k + 1)
            .collect()
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_heads(&self.heads())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Number of target-language tokens.
    pub fn target_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.lang.is_target()).count()
    }

    /// Number of maximal contiguous runs of target-language tokens.
    pub fn target_spans(&self) -> usize {
        let mut spans = 0;
        let mut in_span = false;
        for token in &self.tokens {
            let target = token.lang.is_target();
            if target && !in_span {
                spans += 1;
            }
            in_span = target;
        }
        spans
    }
}

/// Free-standing alias of [`DependencyTree::validate`].
pub fn validate_tree(tree: &DependencyTree) -> Vec<Violation> {
    tree.validate()
}

/// An ordered collection of dependency trees with its label and POS
/// inventories.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Treebank {
    trees: Vec<DependencyTree>,
    label_vocab: BTreeSet<String>,
    pos_vocab: BTreeSet<String>,
}

impl Treebank {
    pub fn new(trees: Vec<DependencyTree>) -> Self {
        let mut label_vocab = BTreeSet::new();
        let mut pos_vocab = BTreeSet::new();
        for token in trees.iter().flat_map(|t| t.tokens.iter()) {
            if !label_vocab.contains(&token.deprel) {
                label_vocab.insert(token.deprel.clone());
            }
            if !pos_vocab.contains(&token.upos) {
                pos_vocab.insert(token.upos.clone());
            }
        }

        Treebank {
            trees,
            label_vocab,
            pos_vocab,
        }
    }

    pub fn trees(&self) -> &[DependencyTree] {
        &self.trees
    }

    pub fn into_trees(self) -> Vec<DependencyTree> {
        self.trees
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.trees.iter().map(DependencyTree::len).sum()
    }

    pub fn label_vocab(&self) -> &BTreeSet<String> {
        &self.label_vocab
    }

    pub fn pos_vocab(&self) -> &BTreeSet<String> {
        &self.pos_vocab
    }

    /// Concatenate two treebanks, `self` first.
    pub fn concat(&self, other: &Treebank) -> Treebank {
        let mut trees = self.trees.clone();
        trees.extend(other.trees.iter().cloned());
        let mut merged = Treebank::new(trees);
        merged.label_vocab.extend(self.label_vocab.iter().cloned());
        merged.label_vocab.extend(other.label_vocab.iter().cloned());
        merged.pos_vocab.extend(self.pos_vocab.iter().cloned());
        merged.pos_vocab.extend(other.pos_vocab.iter().cloned());
        merged
    }
}

impl FromIterator<DependencyTree> for Treebank {
    fn from_iter<I: IntoIterator<Item = DependencyTree>>(iter: I) -> Self {
        Treebank::new(iter.into_iter().collect())
    }
}
