use std::collections::{BTreeSet, HashMap};

use crate::conllu::Token;
use crate::resources::ClusterMap;

/// String to index map; unknown strings map to `len()`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Indexer {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl Indexer {
    pub fn new(items: impl IntoIterator<Item = String>) -> Self {
        let mut indexer = Indexer::default();
        for item in items {
            if !indexer.index.contains_key(&item) {
                indexer.index.insert(item.clone(), indexer.items.len());
                indexer.items.push(item);
            }
        }
        indexer
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn get(&self, item: &str) -> Option<usize> {
        self.index.get(item).copied()
    }

    pub fn item(&self, idx: usize) -> &str {
        &self.items[idx]
    }

    /// Index of `item`, or the unknown index.
    pub fn lookup(&self, item: &str) -> usize {
        self.get(item).unwrap_or(self.items.len())
    }

    /// Case-sensitive lookup with a lowercase fallback.
    pub fn lookup_form(&self, form: &str) -> usize {
        self.get(form)
            .or_else(|| self.get(&form.to_lowercase()))
            .unwrap_or(self.items.len())
    }
}

/// Everything needed to turn tokens into parameter rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Vocab {
    /// Empty for delexicalized models.
    pub words: Indexer,
    pub pos: Indexer,
    pub labels: Indexer,
    /// Known cluster ids are `0..cluster_count`; the next row is unknown.
    pub cluster_count: usize,
    /// Used for tokens that carry no cluster id.
    pub clusters: Option<ClusterMap>,
}

/// Feature indices of one sentence, without the root position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Features {
    pub words: Vec<usize>,
    pub clusters: Vec<usize>,
    pub pos: Vec<usize>,
}

impl Vocab {
    pub fn pos_from<'a>(tokens: impl Iterator<Item = &'a Token>) -> Indexer {
        Indexer::new(tokens.map(|t| t.upos.clone()).collect::<BTreeSet<_>>())
    }

    pub fn cluster_id(&self, token: &Token) -> usize {
        let id = token
            .cluster
            .or_else(|| self.clusters.as_ref().map(|c| c.lookup(&token.form)))
            .map_or(self.cluster_count, |id| id as usize);
        id.min(self.cluster_count)
    }

    pub fn features(&self, tokens: &[Token]) -> Features {
        Features {
            words: tokens
                .iter()
                .map(|t| self.words.lookup_form(&t.form))
                .collect(),
            clusters: tokens.iter().map(|t| self.cluster_id(t)).collect(),
            pos: tokens.iter().map(|t| self.pos.lookup(&t.upos)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknowns_map_past_the_end() {
        let idx = Indexer::new(["a".to_owned(), "b".to_owned(), "a".to_owned()]);
        assert_eq!(idx.len(), 2);
        assert_eq!(idx.lookup("b"), 1);
        assert_eq!(idx.lookup("zzz"), 2);
        assert_eq!(idx.lookup_form("B"), 1);
    }

    #[test]
    fn cluster_ids_fall_back() {
        let mut map = HashMap::new();
        map.insert("dog".to_owned(), 2);
        let vocab = Vocab {
            cluster_count: 3,
            clusters: Some(ClusterMap::new(map)),
            ..Default::default()
        };
        let mut token = Token::new("dog", "NOUN", 0, "root");
        assert_eq!(vocab.cluster_id(&token), 2);
        token.cluster = Some(1);
        assert_eq!(vocab.cluster_id(&token), 1);
        token.cluster = Some(99);
        assert_eq!(vocab.cluster_id(&token), 3);
        token.cluster = None;
        token.form = "cat".into();
        assert_eq!(vocab.cluster_id(&token), 3);
    }
}
