//! Cross-lingual word embeddings and word clusters.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::conllu::{DependencyTree, Token, Treebank};

/// Width of the word embeddings when a file does not say otherwise.
pub const DEFAULT_EMBED_DIM: usize = 50;

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl ResourceError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        ResourceError::Parse {
            line,
            message: message.into(),
        }
    }
}

/// Look up `form`, falling back to its lowercased variant.
fn lookup_with_fallback<'a, V>(map: &'a HashMap<String, V>, form: &str) -> Option<&'a V> {
    map.get(form).or_else(|| {
        let lower = form.to_lowercase();
        if lower != form {
            map.get(&lower)
        } else {
            None
        }
    })
}

/// Word vectors, with the mean vector standing in for unknown words.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
    unk: Vec<f64>,
}

impl EmbeddingTable {
    /// Build a table from `(word, vector)` entries. Later duplicates
    /// replace earlier ones.
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (String, Vec<f64>)>) -> Self {
        let mut table = EmbeddingTable {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            vectors: Vec::new(),
            unk: vec![0.0; dim],
        };
        for (word, vector) in entries {
            assert_eq!(vector.len(), dim, "embedding of '{}' has wrong width", word);
            match table.index.get(&word) {
                Some(&idx) => table.vectors[idx * dim..(idx + 1) * dim].copy_from_slice(&vector),
                None => {
                    table.index.insert(word.clone(), table.words.len());
                    table.words.push(word);
                    table.vectors.extend_from_slice(&vector);
                }
            }
        }
        table.compute_unk();
        table
    }

    fn compute_unk(&mut self) {
        let count = self.words.len();
        self.unk = vec![0.0; self.dim];
        if count == 0 {
            return;
        }
        for row in self.vectors.chunks(self.dim) {
            for (acc, v) in self.unk.iter_mut().zip(row) {
                *acc += v;
            }
        }
        for acc in &mut self.unk {
            *acc /= count as f64;
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Row index of a word (case-sensitive, then lowercased).
    pub fn index_of(&self, form: &str) -> Option<usize> {
        lookup_with_fallback(&self.index, form).copied()
    }

    pub fn vector(&self, idx: usize) -> &[f64] {
        &self.vectors[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn unk_vector(&self) -> &[f64] {
        &self.unk
    }

    /// Vector of `form`, or the unknown-word vector.
    pub fn lookup(&self, form: &str) -> &[f64] {
        match self.index_of(form) {
            Some(idx) => self.vector(idx),
            None => &self.unk,
        }
    }
}

/// Read embeddings in word2vec text format: an optional `<count> <dim>`
/// header, then `word v1 ... v_dim` per line.
pub fn load_embeddings<R: BufRead>(read: R) -> Result<EmbeddingTable, ResourceError> {
    let mut dim: Option<usize> = None;
    let mut entries = Vec::new();

    for (idx, line) in read.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }

        if idx == 0 && fields.len() == 2 {
            if let (Ok(_), Ok(d)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                dim = Some(d);
                continue;
            }
        }

        let values = fields[1..]
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|err| ResourceError::parse(line_no, err.to_string()))?;

        let expected = *dim.get_or_insert(values.len());
        if values.len() != expected {
            return Err(ResourceError::parse(
                line_no,
                format!("expected {} values, found {}", expected, values.len()),
            ));
        }
        entries.push((fields[0].to_owned(), values));
    }

    Ok(EmbeddingTable::new(
        dim.unwrap_or(DEFAULT_EMBED_DIM),
        entries,
    ))
}

pub fn write_embeddings<W: Write>(table: &EmbeddingTable, mut write: W) -> io::Result<()> {
    writeln!(write, "{} {}", table.len(), table.dim())?;
    for (idx, word) in table.words.iter().enumerate() {
        write!(write, "{}", word)?;
        for v in table.vector(idx) {
            write!(write, " {}", v)?;
        }
        writeln!(write)?;
    }
    write.flush()
}

/// Word clusters. Unknown words map to an extra id equal to the
/// cluster count.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClusterMap {
    clusters: HashMap<String, u32>,
    count: u32,
}

impl ClusterMap {
    pub fn new(clusters: HashMap<String, u32>) -> Self {
        let count = clusters.values().max().map_or(0, |&max| max + 1);
        ClusterMap { clusters, count }
    }

    /// Override the cluster count; fails if an id does not fit.
    pub fn with_count(mut self, count: u32) -> Option<Self> {
        if self.clusters.values().any(|&id| id >= count) {
            return None;
        }
        self.count = count;
        Some(self)
    }

    /// Number of clusters `C` (excluding the unknown slot).
    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn unk_cluster(&self) -> u32 {
        self.count
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn get(&self, form: &str) -> Option<u32> {
        lookup_with_fallback(&self.clusters, form).copied()
    }

    pub fn lookup(&self, form: &str) -> u32 {
        self.get(form).unwrap_or(self.count)
    }

    /// Entries sorted by word.
    pub fn entries(&self) -> Vec<(&str, u32)> {
        let mut entries: Vec<(&str, u32)> = self
            .clusters
            .iter()
            .map(|(w, &id)| (w.as_str(), id))
            .collect();
        entries.sort();
        entries
    }
}

/// Read clusters: `word<TAB>cluster_id` per line.
pub fn load_clusters<R: BufRead>(read: R) -> Result<ClusterMap, ResourceError> {
    let mut clusters = HashMap::new();
    for (idx, line) in read.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }

        let (word, id) = line
            .split_once('\t')
            .ok_or_else(|| ResourceError::parse(line_no, "expected word<TAB>cluster_id"))?;
        let id: u32 = id
            .trim()
            .parse()
            .map_err(|_| ResourceError::parse(line_no, format!("invalid cluster id '{}'", id)))?;
        clusters.insert(word.to_owned(), id);
    }

    Ok(ClusterMap::new(clusters))
}

pub fn write_clusters<W: Write>(map: &ClusterMap, mut write: W) -> io::Result<()> {
    for (word, id) in map.entries() {
        writeln!(write, "{}\t{}", word, id)?;
    }
    write.flush()
}

/// Embeddings and clusters used as parser features. Either may be
/// absent.
#[derive(Clone, Debug, Default)]
pub struct Resources {
    pub embeddings: Option<EmbeddingTable>,
    pub clusters: Option<ClusterMap>,
}

/// Attach cluster ids to every token. Word vectors are resolved by the
/// parser from the token forms.
pub fn featurize(treebank: &Treebank, clusters: &ClusterMap) -> Treebank {
    treebank
        .trees()
        .iter()
        .map(|tree| DependencyTree {
            sent_id: tree.sent_id.clone(),
            tokens: tree
                .tokens
                .iter()
                .map(|token| Token {
                    cluster: Some(clusters.lookup(&token.form)),
                    ..token.clone()
                })
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unk_vector_is_mean() {
        let table = load_embeddings("a 1 0 0\nb 0 1 0\n".as_bytes()).unwrap();
        assert_eq!(table.dim(), 3);
        assert_eq!(table.unk_vector(), &[0.5, 0.5, 0.0]);
        assert_eq!(table.lookup("zzz"), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn header_width_is_enforced() {
        let mut data = String::from("5 50\nw");
        for _ in 0..49 {
            data.push_str(" 0.1");
        }
        data.push('\n');
        match load_embeddings(data.as_bytes()) {
            Err(ResourceError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {:?}", other),
        }
    }

    #[test]
    fn lookups_return_exact_values() {
        let mut data = String::from("1000 50\n");
        for w in 0..1000 {
            data.push_str(&format!("w{}", w));
            for d in 0..50 {
                data.push_str(&format!(" {}", (w * 50 + d) as f64 / 7.0));
            }
            data.push('\n');
        }
        let table = load_embeddings(data.as_bytes()).unwrap();
        assert_eq!(table.len(), 1000);
        for w in [0usize, 17, 999] {
            let expected: Vec<f64> = (0..50).map(|d| (w * 50 + d) as f64 / 7.0).collect();
            assert_eq!(table.lookup(&format!("w{}", w)), expected.as_slice());
        }

        let mut out = Vec::new();
        write_embeddings(&table, &mut out).unwrap();
        assert_eq!(load_embeddings(out.as_slice()).unwrap(), table);
    }

    #[test]
    fn lowercase_fallback() {
        let table = load_embeddings("the 1 2\n".as_bytes()).unwrap();
        assert_eq!(table.lookup("The"), &[1.0, 2.0]);
        let clusters = load_clusters("the\t3\n".as_bytes()).unwrap();
        assert_eq!(clusters.lookup("The"), 3);
        // Case-sensitive match wins.
        let clusters = load_clusters("the\t3\nThe\t1\n".as_bytes()).unwrap();
        assert_eq!(clusters.lookup("The"), 1);
    }

    #[test]
    fn cluster_lookup_and_count() {
        let clusters = load_clusters("dog\t17\n".as_bytes()).unwrap();
        assert_eq!(clusters.lookup("dog"), 17);
        assert_eq!(clusters.count(), 18);
        assert_eq!(clusters.lookup("cat"), clusters.unk_cluster());

        let clusters = load_clusters("a\t0\nb\t255\n".as_bytes()).unwrap();
        assert_eq!(clusters.count(), 256);
        assert!(clusters.clone().with_count(100).is_none());
        assert_eq!(clusters.with_count(300).unwrap().unk_cluster(), 300);
    }

    #[test]
    fn cluster_errors() {
        assert!(matches!(
            load_clusters("dog\t-1\n".as_bytes()),
            Err(ResourceError::Parse { line: 1, .. })
        ));
        assert!(load_clusters("dog\t1.5\n".as_bytes()).is_err());
        assert!(load_clusters("dog 1\n".as_bytes()).is_err());
    }

    fn bank(forms: &[&[&str]]) -> Treebank {
        forms
            .iter()
            .map(|sentence| {
                let tokens = sentence
                    .iter()
                    .enumerate()
                    .map(|(k, f)| Token::new(*f, "X", if k == 0 { 0 } else { 1 }, "dep"))
                    .collect();
                DependencyTree::new("s", tokens)
            })
            .collect()
    }

    #[test]
    fn featurize_counts_unknowns() {
        let clusters = load_clusters("a\t0\nb\t1\nc\t2\nd\t3\n".as_bytes()).unwrap();
        let treebank = bank(&[&["a", "x", "b", "y", "z"], &["c", "D", "q", "r", "s"]]);
        let out = featurize(&treebank, &clusters);

        // Oracle: forms not in the known set (after lowercasing).
        let known = ["a", "b", "c", "d"];
        let expected_unk = treebank
            .trees()
            .iter()
            .flat_map(|t| t.tokens.iter())
            .filter(|t| !known.contains(&t.form.to_lowercase().as_str()))
            .count();
        let unk = out
            .trees()
            .iter()
            .flat_map(|t| t.tokens.iter())
            .filter(|t| t.cluster == Some(clusters.unk_cluster()))
            .count();
        assert_eq!(unk, expected_unk);
        assert_eq!(unk, 6);

        assert_eq!(featurize(&out, &clusters), out);
    }

    #[test]
    fn all_oov_sentence() {
        let clusters = load_clusters("a\t0\n".as_bytes()).unwrap();
        let out = featurize(&bank(&[&["x", "y"]]), &clusters);
        assert!(out.trees()[0].tokens.iter().all(|t| t.cluster == Some(1)));
    }
}
