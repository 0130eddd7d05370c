use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::conllu::{DependencyTree, Token, Treebank};
use crate::resources::Resources;

use super::model::ParserModel;
use super::mst::{assign_labels, decode_mst, log_softmax_heads};
use super::params::Adam;
use super::vocab::{Indexer, Vocab};
use super::{ParserConfig, ParserError};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    /// Mean loss per token in every epoch, measured during training.
    pub epoch_losses: Vec<f64>,
}

fn build_vocab(treebank: &Treebank, resources: &Resources) -> Vocab {
    let tokens = || treebank.trees().iter().flat_map(|t| t.tokens.iter());
    let cluster_count = match &resources.clusters {
        Some(map) => map.count() as usize,
        None => tokens()
            .filter_map(|t| t.cluster)
            .max()
            .map_or(0, |max| max as usize + 1),
    };
    let mut forms: Vec<String> = tokens().map(|t| t.form.clone()).collect();
    forms.sort();

    Vocab {
        words: Indexer::new(forms),
        pos: Vocab::pos_from(tokens()),
        labels: Indexer::new(treebank.label_vocab().iter().cloned()),
        cluster_count,
        clusters: resources.clusters.clone(),
    }
}

/// Train a parser for `config.epochs` passes over `treebank` and return
/// the final model.
///
/// Sentences are shuffled every epoch and grouped into batches of
/// `config.batch_size`; each batch takes one Adam step on the summed
/// gradient divided by the batch's token count. All randomness comes
/// from `config.seed`.
pub fn train(
    treebank: &Treebank,
    resources: &Resources,
    config: &ParserConfig,
) -> Result<(ParserModel, TrainingLog), ParserError> {
    config.validate()?;
    if treebank.is_empty() {
        return Err(ParserError::Config("the training treebank is empty".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vocab = build_vocab(treebank, resources);
    let mut model = ParserModel::new(
        config.clone(),
        vocab,
        resources.embeddings.as_ref(),
        &mut rng,
    )?;
    let mut adam = Adam::new(config.adam(), &model.params);
    let mut log = TrainingLog::default();

    let trees = treebank.trees();
    let mut order: Vec<usize> = (0..trees.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;

        for batch in order.chunks(config.batch_size) {
            let mut grads = model.params.zero_grads();
            let mut tokens = 0;
            for &k in batch {
                let (loss, sentence_grads) = model.loss_and_gradients(&trees[k], Some(&mut rng))?;
                epoch_loss += loss;
                tokens += trees[k].len();
                model.params.accumulate(&mut grads, sentence_grads);
            }
            let scale = 1.0 / tokens.max(1) as f64;
            for g in &mut grads {
                g.mapv_inplace(|v| v * scale);
            }
            adam.step(&mut model.params, &mut grads);
        }

        let mean = epoch_loss / treebank.token_count().max(1) as f64;
        log::debug!("epoch {}: loss {:.4}", epoch + 1, mean);
        log.epoch_losses.push(mean);
    }

    Ok((model, log))
}

/// Predict the tree of one sentence. Forms, tags and languages are kept;
/// heads and labels are replaced.
pub fn parse_tree(model: &ParserModel, tree: &DependencyTree) -> DependencyTree {
    if tree.is_empty() {
        return tree.clone();
    }
    let state = model.encode(&tree.tokens);
    let scores = model.score(&state);
    let heads = decode_mst(&log_softmax_heads(&scores.arcs));
    let labels = assign_labels(&scores.labels, &heads);

    let tokens = tree
        .tokens
        .iter()
        .zip(heads.iter().zip(&labels))
        .map(|(token, (&head, &label))| Token {
            head,
            deprel: model.labels()[label].clone(),
            ..token.clone()
        })
        .collect();
    DependencyTree::new(tree.sent_id.clone(), tokens)
}

pub fn parse(treebank: &Treebank, model: &ParserModel) -> Treebank {
    treebank
        .trees()
        .iter()
        .map(|tree| parse_tree(model, tree))
        .collect()
}
