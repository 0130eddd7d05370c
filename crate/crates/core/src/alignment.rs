//! Word-alignment probabilities between source sentences and their
//! machine translations.
//!
//! For every sentence pair we need `p(e_i | f_j)`: for each target word
//! `f_j` a distribution over the source words `e_1..e_n` plus the null
//! word `e_0`. Matrices can be read precomputed, or derived from a
//! lexical translation table.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reserved source form for the null word in lexical tables.
pub const NULL_WORD: &str = "<eps>";

/// Columns whose sum deviates from 1 by more than this are rejected.
pub const COLUMN_SUM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum AlignmentError {
    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("pair {pair_id}: {message}")]
    Data { pair_id: String, message: String },
}

impl AlignmentError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        AlignmentError::Parse {
            line,
            message: message.into(),
        }
    }

    fn data(pair_id: &str, message: impl Into<String>) -> Self {
        AlignmentError::Data {
            pair_id: pair_id.to_owned(),
            message: message.into(),
        }
    }
}

/// A source sentence and its translation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentencePair {
    pub pair_id: String,
    pub source: Vec<String>,
    pub target: Vec<String>,
}

impl SentencePair {
    pub fn new<S: Into<String>>(
        pair_id: impl Into<String>,
        source: impl IntoIterator<Item = S>,
        target: impl IntoIterator<Item = S>,
    ) -> Self {
        SentencePair {
            pair_id: pair_id.into(),
            source: source.into_iter().map(Into::into).collect(),
            target: target.into_iter().map(Into::into).collect(),
        }
    }
}

/// Read a pair file: `pair_id<TAB>source tokens<TAB>target tokens`, with
/// whitespace-separated tokens.
pub fn read_pairs<R: BufRead>(read: R) -> Result<Vec<SentencePair>, AlignmentError> {
    let mut pairs = Vec::new();
    for (idx, line) in read.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }

        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(AlignmentError::parse(
                line_no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }

        let pair = SentencePair::new(
            fields[0],
            fields[1].split_whitespace(),
            fields[2].split_whitespace(),
        );
        if pair.source.is_empty() || pair.target.is_empty() {
            return Err(AlignmentError::parse(
                line_no,
                "empty source or target sentence",
            ));
        }
        pairs.push(pair);
    }

    Ok(pairs)
}

pub fn write_pairs<W: Write>(pairs: &[SentencePair], mut write: W) -> io::Result<()> {
    for pair in pairs {
        writeln!(
            write,
            "{}\t{}\t{}",
            pair.pair_id,
            pair.source.join(" "),
            pair.target.join(" ")
        )?;
    }
    write.flush()
}

/// Alignment probabilities `p(e_i | f_j)` for one sentence pair.
///
/// Rows are source positions `0..=n` (row 0 is the null word), columns
/// are target positions `1..=m`. Every column is a probability
/// distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentMatrix {
    pair_id: String,
    probs: Array2<f64>,
}

impl AlignmentMatrix {
    /// Construct a matrix from raw column weights, normalizing each
    /// column. Columns must sum to 1 within [`COLUMN_SUM_TOLERANCE`].
    pub fn new(pair_id: impl Into<String>, probs: Array2<f64>) -> Result<Self, AlignmentError> {
        let pair_id = pair_id.into();
        if probs.nrows() < 2 || probs.ncols() < 1 {
            return Err(AlignmentError::data(
                &pair_id,
                format!("degenerate shape {}x{}", probs.nrows(), probs.ncols()),
            ));
        }
        if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(AlignmentError::data(
                &pair_id,
                format!("probability {} outside [0, 1]", bad),
            ));
        }

        let mut probs = probs;
        for (j, mut column) in probs.columns_mut().into_iter().enumerate() {
            let sum: f64 = column.sum();
            if (sum - 1.0).abs() > COLUMN_SUM_TOLERANCE {
                return Err(AlignmentError::data(
                    &pair_id,
                    format!("column {} sums to {}", j + 1, sum),
                ));
            }
            column.mapv_inplace(|p| p / sum);
        }

        Ok(AlignmentMatrix { pair_id, probs })
    }

    pub fn pair_id(&self) -> &str {
        &self.pair_id
    }

    /// Number of source words (excluding the null word).
    pub fn n(&self) -> usize {
        self.probs.nrows() - 1
    }

    /// Number of target words.
    pub fn m(&self) -> usize {
        self.probs.ncols()
    }

    /// `p(e_i | f_j)` with `i` in `0..=n` and 1-based `j`.
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.probs[(i, j - 1)]
    }

    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }

    /// Best source word for every target word.
    ///
    /// Returns `(a_j, p_j)` for `j = 1..=m`. Ties go to the smallest
    /// source index, so a tie with the null word yields 0.
    pub fn best_alignments(&self) -> Vec<(usize, f64)> {
        self.probs
            .columns()
            .into_iter()
            .map(|column| {
                let mut best = (0, column[0]);
                for (i, &p) in column.iter().enumerate().skip(1) {
                    if p > best.1 {
                        best = (i, p);
                    }
                }
                best
            })
            .collect()
    }

    /// Retention score of source word `i`: the sum of its alignment
    /// probabilities over all target words.
    pub fn retention(&self, i: usize) -> f64 {
        self.probs.row(i).sum()
    }
}

/// Free-standing alias of [`AlignmentMatrix::best_alignments`].
pub fn best_alignments(matrix: &AlignmentMatrix) -> Vec<(usize, f64)> {
    matrix.best_alignments()
}

#[derive(Serialize, Deserialize)]
struct MatrixRecord {
    pair_id: String,
    n: usize,
    m: usize,
    probs: Vec<f64>,
}

/// Read line-delimited JSON matrix records.
///
/// Each record has `pair_id`, `n`, `m` and `probs`, the row-major
/// `(n + 1) x m` matrix with the null word in the first row.
pub fn load_matrix_file<R: BufRead>(read: R) -> Result<Vec<AlignmentMatrix>, AlignmentError> {
    let mut matrices = Vec::new();
    for (idx, line) in read.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }

        let record: MatrixRecord = serde_json::from_str(&line)
            .map_err(|err| AlignmentError::parse(idx + 1, err.to_string()))?;
        if record.n < 1 || record.m < 1 || record.probs.len() != (record.n + 1) * record.m {
            return Err(AlignmentError::data(
                &record.pair_id,
                format!(
                    "dimension mismatch: n={}, m={}, {} probabilities",
                    record.n,
                    record.m,
                    record.probs.len()
                ),
            ));
        }

        let probs = Array2::from_shape_vec((record.n + 1, record.m), record.probs)
            .expect("shape checked above");
        matrices.push(AlignmentMatrix::new(record.pair_id, probs)?);
    }

    Ok(matrices)
}

pub fn write_matrix_file<W: Write>(matrices: &[AlignmentMatrix], mut write: W) -> io::Result<()> {
    for matrix in matrices {
        let record = MatrixRecord {
            pair_id: matrix.pair_id.clone(),
            n: matrix.n(),
            m: matrix.m(),
            probs: matrix.probs.iter().copied().collect(),
        };
        serde_json::to_writer(&mut write, &record)?;
        writeln!(write)?;
    }
    write.flush()
}

/// Lexical translation scores, as produced by an aligner.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LexicalTable {
    scores: HashMap<String, HashMap<String, f64>>,
    null_scores: HashMap<String, f64>,
    default_null: f64,
}

impl LexicalTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Score used for null alignments of target forms without an
    /// explicit `<eps>` entry.
    pub fn with_default_null(mut self, score: f64) -> Self {
        self.default_null = score;
        self
    }

    pub fn insert(&mut self, source: impl Into<String>, target: impl Into<String>, score: f64) {
        let (source, target) = (source.into(), target.into());
        if source == NULL_WORD {
            self.null_scores.insert(target, score);
        } else {
            self.scores.entry(source).or_default().insert(target, score);
        }
    }

    pub fn score(&self, source: &str, target: &str) -> f64 {
        self.scores
            .get(source)
            .and_then(|targets| targets.get(target))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn null_score(&self, target: &str) -> f64 {
        self.null_scores
            .get(target)
            .copied()
            .unwrap_or(self.default_null)
    }

    pub fn len(&self) -> usize {
        self.scores.values().map(HashMap::len).sum::<usize>() + self.null_scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Load a lexical table: `source<TAB>target<TAB>score` per line.
///
/// If the first non-empty line is `log:`, scores are log-probabilities
/// and are exponentiated. Later duplicates overwrite earlier ones.
pub fn load_lexical_table<R: BufRead>(read: R) -> Result<LexicalTable, AlignmentError> {
    let mut table = LexicalTable::new();
    let mut log_scores = false;
    let mut seen_content = false;

    for (idx, line) in read.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }

        if !seen_content {
            seen_content = true;
            if line.trim() == "log:" {
                log_scores = true;
                continue;
            }
        }

        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(AlignmentError::parse(
                line_no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }

        let raw: f64 = fields[2].trim().parse().map_err(|_| {
            AlignmentError::parse(line_no, format!("invalid score '{}'", fields[2]))
        })?;
        let score = if log_scores { raw.exp() } else { raw };
        if !score.is_finite() || score < 0.0 {
            return Err(AlignmentError::parse(
                line_no,
                format!("score must be non-negative, found {}", raw),
            ));
        }

        table.insert(fields[0], fields[1], score);
    }

    Ok(table)
}

/// Derive the alignment matrix of a sentence pair from a lexical table.
///
/// Every entry gets `smoothing` added before columns are normalized;
/// a column that is still all zeros becomes uniform.
pub fn derive_matrix(
    pair: &SentencePair,
    table: &LexicalTable,
    smoothing: f64,
) -> Result<AlignmentMatrix, AlignmentError> {
    if !smoothing.is_finite() || smoothing < 0.0 {
        return Err(AlignmentError::data(
            &pair.pair_id,
            format!("smoothing must be non-negative, found {}", smoothing),
        ));
    }
    if pair.source.is_empty() || pair.target.is_empty() {
        return Err(AlignmentError::data(&pair.pair_id, "empty sentence"));
    }

    let n = pair.source.len();
    let m = pair.target.len();
    let mut probs = Array2::zeros((n + 1, m));
    for (j, target) in pair.target.iter().enumerate() {
        probs[(0, j)] = table.null_score(target) + smoothing;
        for (i, source) in pair.source.iter().enumerate() {
            probs[(i + 1, j)] = table.score(source, target) + smoothing;
        }

        let sum: f64 = probs.column(j).sum();
        if sum > 0.0 {
            probs.column_mut(j).mapv_inplace(|p| p / sum);
        } else {
            probs.column_mut(j).fill(1.0 / (n + 1) as f64);
        }
    }

    AlignmentMatrix::new(pair.pair_id.clone(), probs)
}

/// Default smoothing mass for [`derive_matrix`].
pub const DEFAULT_SMOOTHING: f64 = 1e-9;
