//! A first-order graph-based dependency parser with biaffine scoring.
//!
//! Tokens are embedded as the concatenation of a word vector, a word
//! cluster vector and a POS vector. A stacked bidirectional LSTM
//! encodes the sentence, with a learned vector standing in for the
//! virtual root at position 0. Four feed-forward layers project every
//! encoder state into dependent and head spaces for arcs and labels,
//! and biaffine products score all (head, dependent) pairs. Decoding
//! finds the best spanning tree with exactly one root dependent.

mod graph;
mod io;
mod model;
mod mst;
mod params;
mod train;
mod vocab;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::graph::{Graph, Var};
pub use self::io::{load_model, save_model, MODEL_VERSION};
pub use self::model::{EncoderState, ParserModel, ScoreTensor};
pub use self::mst::{assign_labels, decode_mst, log_softmax_heads, tree_score};
pub use self::params::{Adam, AdamConfig, Gradients, Param, ParamId, ParamStore};
pub use self::train::{parse, parse_tree, train, TrainingLog};
pub use self::vocab::{Features, Indexer, Vocab};

#[derive(Debug, Error)]
pub enum ParserError {
    #[error("invalid parser configuration: {0}")]
    Config(String),

    #[error("sentence {sent_id}: label '{label}' is not in the model's label set")]
    UnknownLabel { sent_id: String, label: String },

    #[error("sentence {sent_id}: {message}")]
    Data { sent_id: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("corrupt model file: {0}")]
    Corrupt(String),

    #[error("model file version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParserConfig {
    /// Word embedding width; replaced by the width of pretrained
    /// embeddings when those are supplied.
    pub embed_dim: usize,
    pub cluster_embed_dim: usize,
    pub pos_embed_dim: usize,
    pub encoder_layers: usize,
    /// LSTM state size per direction.
    pub encoder_hidden: usize,
    pub arc_mlp_dim: usize,
    pub label_mlp_dim: usize,
    pub dropout: f64,
    pub epochs: usize,
    /// Sentences per gradient step.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub lr_decay: f64,
    pub decay_steps: f64,
    pub clip: f64,
    /// Drop word vectors and use only clusters and POS tags.
    pub delexicalized: bool,
    pub seed: u64,
}

impl Default for ParserConfig {
    fn default() -> Self {
        ParserConfig {
            embed_dim: 50,
            cluster_embed_dim: 8,
            pos_embed_dim: 8,
            encoder_layers: 3,
            encoder_hidden: 64,
            arc_mlp_dim: 100,
            label_mlp_dim: 50,
            dropout: 0.33,
            epochs: 50,
            batch_size: 8,
            learning_rate: 2e-3,
            beta1: 0.9,
            beta2: 0.9,
            epsilon: 1e-12,
            lr_decay: 0.75,
            decay_steps: 5000.0,
            clip: 5.0,
            delexicalized: false,
            seed: 1,
        }
    }
}

impl ParserConfig {
    /// Smaller network for quick experiments on a single core.
    pub fn desk() -> Self {
        ParserConfig {
            encoder_layers: 1,
            encoder_hidden: 32,
            arc_mlp_dim: 64,
            label_mlp_dim: 32,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ParserError> {
        let dims = [
            ("cluster_embed_dim", self.cluster_embed_dim),
            ("pos_embed_dim", self.pos_embed_dim),
            ("encoder_layers", self.encoder_layers),
            ("encoder_hidden", self.encoder_hidden),
            ("arc_mlp_dim", self.arc_mlp_dim),
            ("label_mlp_dim", self.label_mlp_dim),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
        ];
        for (name, value) in dims {
            if value == 0 {
                return Err(ParserError::Config(format!("{} must be at least 1", name)));
            }
        }
        if !self.delexicalized && self.embed_dim == 0 {
            return Err(ParserError::Config("embed_dim must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ParserError::Config(format!(
                "dropout {} is outside [0, 1)",
                self.dropout
            )));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(ParserError::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            decay: self.lr_decay,
            decay_steps: self.decay_steps,
            clip: self.clip,
        }
    }
}
