use ndarray::{s, Array2, Array3, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::conllu::{DependencyTree, Token};
use crate::resources::EmbeddingTable;

use super::graph::{Graph, Var};
use super::params::{Gradients, ParamId, ParamStore};
use super::vocab::Vocab;
use super::{ParserConfig, ParserError};

const LEAKY_SLOPE: f64 = 0.1;

/// Encoder output for a sentence of `n` tokens. Every matrix has `n + 1`
/// rows; row 0 is the virtual root.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderState {
    pub hidden: Array2<f64>,
    pub arc_dep: Array2<f64>,
    pub arc_head: Array2<f64>,
    pub label_dep: Array2<f64>,
    pub label_head: Array2<f64>,
}

/// Raw scores. `arcs[[j, i - 1]]` scores head `j` for dependent `i`;
/// `labels[[j, i - 1, l]]` scores label `l` on that arc.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTensor {
    pub arcs: Array2<f64>,
    pub labels: Array3<f64>,
}

impl ScoreTensor {
    /// Summed word-level cross-entropy of a gold analysis: head softmax
    /// over all tokens but the dependent itself, label softmax at the
    /// gold head.
    pub fn cross_entropy(&self, heads: &[usize], labels: &[usize]) -> f64 {
        let log_heads = super::mst::log_softmax_heads(&self.arcs);
        let mut loss = 0.0;
        for (k, (&h, &l)) in heads.iter().zip(labels).enumerate() {
            loss -= log_heads[[h, k]];
            let cell = self.labels.slice(s![h, k, ..]);
            let max = cell.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let log_total = cell.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss -= cell[l] - max - log_total;
        }
        loss
    }
}

#[derive(Clone, Copy, Debug)]
struct Lstm {
    input: ParamId,
    hidden: ParamId,
    bias: ParamId,
}

#[derive(Clone, Copy, Debug)]
struct Projection {
    weight: ParamId,
    bias: ParamId,
}

/// Where each parameter lives in the store.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    words: Option<ParamId>,
    clusters: ParamId,
    pos: ParamId,
    root: ParamId,
    /// Per layer: forward and backward direction.
    lstm: Vec<[Lstm; 2]>,
    arc_dep: Projection,
    arc_head: Projection,
    label_dep: Projection,
    label_head: Projection,
    arc_u: ParamId,
    arc_w: ParamId,
    arc_b: ParamId,
    label_u: ParamId,
    label_w: ParamId,
    label_b: ParamId,
}

impl Layout {
    /// Find every parameter by name.
    pub(crate) fn resolve(store: &ParamStore, config: &ParserConfig) -> Result<Self, ParserError> {
        let find = |name: &str| {
            store
                .ids()
                .find(|&id| store.get(id).name == name)
                .ok_or_else(|| ParserError::Corrupt(format!("missing parameter '{}'", name)))
        };
        let projection = |name: &str| -> Result<Projection, ParserError> {
            Ok(Projection {
                weight: find(&format!("{}.weight", name))?,
                bias: find(&format!("{}.bias", name))?,
            })
        };
        let lstm = |layer: usize, dir: &str| -> Result<Lstm, ParserError> {
            Ok(Lstm {
                input: find(&format!("lstm{}.{}.input", layer, dir))?,
                hidden: find(&format!("lstm{}.{}.hidden", layer, dir))?,
                bias: find(&format!("lstm{}.{}.bias", layer, dir))?,
            })
        };

        Ok(Layout {
            words: if config.delexicalized {
                None
            } else {
                Some(find("embed.words")?)
            },
            clusters: find("embed.clusters")?,
            pos: find("embed.pos")?,
            root: find("embed.root")?,
            lstm: (0..config.encoder_layers)
                .map(|l| Ok([lstm(l, "fwd")?, lstm(l, "bwd")?]))
                .collect::<Result<_, ParserError>>()?,
            arc_dep: projection("arc_dep")?,
            arc_head: projection("arc_head")?,
            label_dep: projection("label_dep")?,
            label_head: projection("label_head")?,
            arc_u: find("arc.u")?,
            arc_w: find("arc.w")?,
            arc_b: find("arc.b")?,
            label_u: find("label.u")?,
            label_w: find("label.w")?,
            label_b: find("label.b")?,
        })
    }
}

/// Graph nodes of an encoded sentence.
struct Encoded {
    hidden: Var,
    arc_dep: Var,
    arc_head: Var,
    label_dep: Var,
    label_head: Var,
}

#[derive(Clone, Debug)]
pub struct ParserModel {
    pub(crate) config: ParserConfig,
    pub(crate) vocab: Vocab,
    pub(crate) params: ParamStore,
    pub(crate) layout: Layout,
}

impl ParserModel {
    /// A freshly initialized model.
    ///
    /// With `embeddings`, word vectors are the (frozen) pretrained ones and
    /// `vocab.words` is replaced by the table's words. Otherwise, unless the
    /// model is delexicalized, word vectors are learned for `vocab.words`.
    pub fn new(
        mut config: ParserConfig,
        mut vocab: Vocab,
        embeddings: Option<&EmbeddingTable>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, ParserError> {
        if let (Some(table), false) = (embeddings, config.delexicalized) {
            if table.dim() != config.embed_dim {
                log::info!(
                    "using the pretrained embedding width {} instead of {}",
                    table.dim(),
                    config.embed_dim
                );
                config.embed_dim = table.dim();
            }
        }
        config.validate()?;
        if vocab.labels.is_empty() {
            return Err(ParserError::Config("the label set is empty".into()));
        }

        let c = &config;
        let mut store = ParamStore::default();

        if !c.delexicalized {
            match embeddings {
                Some(table) => {
                    let rows = table.len() + 1;
                    let mut matrix = Array2::zeros((rows, table.dim()));
                    for k in 0..table.len() {
                        matrix.row_mut(k).assign(&ndarray::aview1(table.vector(k)));
                    }
                    matrix
                        .row_mut(table.len())
                        .assign(&ndarray::aview1(table.unk_vector()));
                    vocab.words = super::vocab::Indexer::new(table.words().iter().cloned());
                    store.add("embed.words", matrix, false);
                }
                None => {
                    store.add_glorot(rng, "embed.words", vocab.words.len() + 1, c.embed_dim);
                }
            }
        } else {
            vocab.words = Default::default();
        }

        let input_dim =
            if c.delexicalized { 0 } else { c.embed_dim } + c.cluster_embed_dim + c.pos_embed_dim;
        store.add_glorot(
            rng,
            "embed.clusters",
            vocab.cluster_count + 1,
            c.cluster_embed_dim,
        );
        store.add_glorot(rng, "embed.pos", vocab.pos.len() + 1, c.pos_embed_dim);
        store.add_glorot(rng, "embed.root", 1, input_dim);

        let h = c.encoder_hidden;
        for layer in 0..c.encoder_layers {
            let width = if layer == 0 { input_dim } else { 2 * h };
            for dir in ["fwd", "bwd"] {
                store.add_glorot(rng, format!("lstm{}.{}.input", layer, dir), width, 4 * h);
                store.add_glorot(rng, format!("lstm{}.{}.hidden", layer, dir), h, 4 * h);
                // Gate order i, f, g, o; the forget gate starts open.
                let mut bias = Array2::zeros((1, 4 * h));
                bias.slice_mut(s![.., h..2 * h]).fill(1.0);
                store.add(format!("lstm{}.{}.bias", layer, dir), bias, true);
            }
        }

        for (name, dim) in [
            ("arc_dep", c.arc_mlp_dim),
            ("arc_head", c.arc_mlp_dim),
            ("label_dep", c.label_mlp_dim),
            ("label_head", c.label_mlp_dim),
        ] {
            store.add_glorot(rng, format!("{}.weight", name), 2 * h, dim);
            store.add_zeros(format!("{}.bias", name), 1, dim);
        }

        let labels = vocab.labels.len();
        store.add_glorot(rng, "arc.u", c.arc_mlp_dim, c.arc_mlp_dim);
        store.add_zeros("arc.w", 1, c.arc_mlp_dim);
        store.add_zeros("arc.b", 1, 1);
        store.add_glorot(rng, "label.u", c.label_mlp_dim, labels * c.label_mlp_dim);
        store.add_zeros("label.w", 2 * c.label_mlp_dim, labels);
        store.add_zeros("label.b", 1, labels);

        let layout = Layout::resolve(&store, &config)?;
        Ok(ParserModel {
            config,
            vocab,
            params: store,
            layout,
        })
    }

    pub fn config(&self) -> &ParserConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn labels(&self) -> &[String] {
        self.vocab.labels.items()
    }

    /// Inverted dropout on `x` when `rng` is given.
    fn dropout(&self, g: &mut Graph, x: Var, rng: &mut Option<&mut ChaCha8Rng>) -> Var {
        let p = self.config.dropout;
        match rng {
            Some(rng) if p > 0.0 => {
                let keep = 1.0 / (1.0 - p);
                let shape = g.value(x).raw_dim();
                let mask = Array2::from_shape_simple_fn(shape, || {
                    if rng.gen::<f64>() < p {
                        0.0
                    } else {
                        keep
                    }
                });
                let mask = g.input(mask);
                g.mul(x, mask)
            }
            _ => x,
        }
    }

    fn lstm(&self, g: &mut Graph, x: Var, ids: Lstm, reverse: bool) -> Var {
        let h = self.config.encoder_hidden;
        let len = g.value(x).nrows();

        let w_in = g.param(&self.params, ids.input);
        let w_hidden = g.param(&self.params, ids.hidden);
        let bias = g.param(&self.params, ids.bias);
        let projected = g.matmul(x, w_in);
        let projected = g.add(projected, bias);

        let mut state = g.input(Array2::zeros((1, h)));
        let mut cell = g.input(Array2::zeros((1, h)));
        let mut outputs = vec![state; len];

        let steps: Vec<usize> = if reverse {
            (0..len).rev().collect()
        } else {
            (0..len).collect()
        };
        for t in steps {
            let row = g.slice_rows(projected, t, t + 1);
            let recurrent = g.matmul(state, w_hidden);
            let z = g.add(row, recurrent);

            let input_gate = g.slice_cols(z, 0, h);
            let input_gate = g.sigmoid(input_gate);
            let forget_gate = g.slice_cols(z, h, 2 * h);
            let forget_gate = g.sigmoid(forget_gate);
            let candidate = g.slice_cols(z, 2 * h, 3 * h);
            let candidate = g.tanh(candidate);
            let output_gate = g.slice_cols(z, 3 * h, 4 * h);
            let output_gate = g.sigmoid(output_gate);

            let kept = g.mul(forget_gate, cell);
            let written = g.mul(input_gate, candidate);
            cell = g.add(kept, written);
            let squashed = g.tanh(cell);
            state = g.mul(output_gate, squashed);
            outputs[t] = state;
        }
        g.concat_rows(&outputs)
    }

    fn project(
        &self,
        g: &mut Graph,
        x: Var,
        ids: Projection,
        rng: &mut Option<&mut ChaCha8Rng>,
    ) -> Var {
        let w = g.param(&self.params, ids.weight);
        let b = g.param(&self.params, ids.bias);
        let y = g.matmul(x, w);
        let y = g.add(y, b);
        let y = g.leaky_relu(y, LEAKY_SLOPE);
        self.dropout(g, y, rng)
    }

    fn encode_graph(
        &self,
        g: &mut Graph,
        tokens: &[Token],
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Encoded {
        assert!(!tokens.is_empty(), "cannot encode an empty sentence");
        let features = self.vocab.features(tokens);
        let layout = &self.layout;

        let mut parts = Vec::with_capacity(3);
        if let Some(words) = layout.words {
            let param = self.params.get(words);
            let node = if param.trainable {
                let table = g.param(&self.params, words);
                g.gather(table, &features.words)
            } else {
                g.input(param.value.select(Axis(0), &features.words))
            };
            parts.push(node);
        }
        let clusters = g.param(&self.params, layout.clusters);
        parts.push(g.gather(clusters, &features.clusters));
        let pos = g.param(&self.params, layout.pos);
        parts.push(g.gather(pos, &features.pos));

        let words = g.concat_cols(&parts);
        let root = g.param(&self.params, layout.root);
        let mut x = g.concat_rows(&[root, words]);
        x = self.dropout(g, x, &mut rng);

        for layer in &layout.lstm {
            let forward = self.lstm(g, x, layer[0], false);
            let backward = self.lstm(g, x, layer[1], true);
            x = g.concat_cols(&[forward, backward]);
            x = self.dropout(g, x, &mut rng);
        }

        Encoded {
            hidden: x,
            arc_dep: self.project(g, x, layout.arc_dep, &mut rng),
            arc_head: self.project(g, x, layout.arc_head, &mut rng),
            label_dep: self.project(g, x, layout.label_dep, &mut rng),
            label_head: self.project(g, x, layout.label_head, &mut rng),
        }
    }

    /// Encode a sentence in evaluation mode (no dropout).
    ///
    /// # Panics
    ///
    /// If `tokens` is empty.
    pub fn encode(&self, tokens: &[Token]) -> EncoderState {
        let mut g = Graph::new();
        let e = self.encode_graph(&mut g, tokens, None);
        EncoderState {
            hidden: g.value(e.hidden).clone(),
            arc_dep: g.value(e.arc_dep).clone(),
            arc_head: g.value(e.arc_head).clone(),
            label_dep: g.value(e.label_dep).clone(),
            label_head: g.value(e.label_head).clone(),
        }
    }

    /// Biaffine arc and label scores for every (head, dependent) pair.
    pub fn score(&self, state: &EncoderState) -> ScoreTensor {
        let p = |id| self.params.value(id);
        let layout = &self.layout;
        let n = state.arc_dep.nrows() - 1;

        // arcs[j][i] = dep_i U head_j + w head_j + b
        let dep = state.arc_dep.slice(s![1.., ..]);
        let dep_u = dep.dot(p(layout.arc_u));
        let head_bias = state.arc_head.dot(&p(layout.arc_w).t());
        let mut arcs = state.arc_head.dot(&dep_u.t());
        arcs += &head_bias;
        arcs += p(layout.arc_b)[[0, 0]];

        let d = self.config.label_mlp_dim;
        let label_count = self.vocab.labels.len();
        let dep = state.label_dep.slice(s![1.., ..]);
        let w = p(layout.label_w);
        let mut labels = Array3::zeros((n + 1, n, label_count));
        for l in 0..label_count {
            let u = p(layout.label_u).slice(s![.., l * d..(l + 1) * d]);
            let mut slice = state.label_head.dot(&dep.dot(&u).t());
            let dep_term = dep.dot(&w.slice(s![..d, l]));
            let head_term = state.label_head.dot(&w.slice(s![d.., l]));
            slice += &dep_term.insert_axis(Axis(0));
            slice += &head_term.insert_axis(Axis(1));
            slice += p(layout.label_b)[[0, l]];
            labels.slice_mut(s![.., .., l]).assign(&slice);
        }

        ScoreTensor { arcs, labels }
    }

    /// Gold label indices of a tree.
    pub fn label_indices(&self, tree: &DependencyTree) -> Result<Vec<usize>, ParserError> {
        tree.tokens
            .iter()
            .map(|t| {
                self.vocab
                    .labels
                    .get(&t.deprel)
                    .ok_or_else(|| ParserError::UnknownLabel {
                        sent_id: tree.sent_id.clone(),
                        label: t.deprel.clone(),
                    })
            })
            .collect()
    }

    fn loss_graph(
        &self,
        g: &mut Graph,
        tree: &DependencyTree,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Var, ParserError> {
        let n = tree.len();
        let heads = tree.heads();
        let labels = self.label_indices(tree)?;
        let e = self.encode_graph(g, &tree.tokens, rng);
        let layout = &self.layout;

        // Rows are dependents, columns candidate heads.
        let dep = g.slice_rows(e.arc_dep, 1, n + 1);
        let u = g.param(&self.params, layout.arc_u);
        let dep_u = g.matmul(dep, u);
        let arcs = g.matmul_t(dep_u, e.arc_head);
        let w = g.param(&self.params, layout.arc_w);
        let head_bias = g.matmul_t(w, e.arc_head);
        let arcs = g.add(arcs, head_bias);
        let b = g.param(&self.params, layout.arc_b);
        let arcs = g.add(arcs, b);
        let self_loops: Vec<Option<usize>> = (1..=n).map(Some).collect();
        let arc_loss = g.cross_entropy(arcs, &heads, &self_loops);

        let dep = g.slice_rows(e.label_dep, 1, n + 1);
        let gold_heads = g.gather(e.label_head, &heads);
        let u = g.param(&self.params, layout.label_u);
        let dep_u = g.matmul(dep, u);
        let bilinear = g.block_row_dot(dep_u, gold_heads);
        let both = g.concat_cols(&[dep, gold_heads]);
        let w = g.param(&self.params, layout.label_w);
        let linear = g.matmul(both, w);
        let scores = g.add(bilinear, linear);
        let b = g.param(&self.params, layout.label_b);
        let scores = g.add(scores, b);
        let label_loss = g.cross_entropy(scores, &labels, &vec![None; n]);

        Ok(g.add(arc_loss, label_loss))
    }

    /// Loss of a gold tree in evaluation mode.
    pub fn loss(&self, tree: &DependencyTree) -> Result<f64, ParserError> {
        let mut g = Graph::new();
        let out = self.loss_graph(&mut g, tree, None)?;
        Ok(g.value(out)[[0, 0]])
    }

    /// Loss and parameter gradients. Dropout is applied when `rng` is
    /// given.
    pub fn loss_and_gradients(
        &self,
        tree: &DependencyTree,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(f64, Gradients), ParserError> {
        let mut g = Graph::new();
        let out = self.loss_graph(&mut g, tree, rng)?;
        let loss = g.value(out)[[0, 0]];
        Ok((loss, g.backward(out)))
    }
}
