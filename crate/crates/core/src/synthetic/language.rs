use std::collections::HashMap;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::alignment::{AlignmentMatrix, SentencePair};
use crate::conllu::{DependencyTree, Lang, Token, Treebank};
use crate::resources::{ClusterMap, EmbeddingTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Class {
    Noun,
    Pron,
    TransVerb,
    IntransVerb,
    Adj,
    Det,
    Adp,
    Adv,
    Aux,
    Punct,
}

impl Class {
    const ALL: [Class; 10] = [
        Class::Noun,
        Class::Pron,
        Class::TransVerb,
        Class::IntransVerb,
        Class::Adj,
        Class::Det,
        Class::Adp,
        Class::Adv,
        Class::Aux,
        Class::Punct,
    ];

    fn upos(self) -> &'static str {
        match self {
            Class::Noun => "NOUN",
            Class::Pron => "PRON",
            Class::TransVerb | Class::IntransVerb => "VERB",
            Class::Adj => "ADJ",
            Class::Det => "DET",
            Class::Adp => "ADP",
            Class::Adv => "ADV",
            Class::Aux => "AUX",
            Class::Punct => "PUNCT",
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Class::Noun => "o",
            Class::Pron => "i",
            Class::TransVerb | Class::IntransVerb => "et",
            Class::Adj => "a",
            Class::Det => "u",
            Class::Adp => "em",
            Class::Adv => "ik",
            Class::Aux | Class::Punct => "",
        }
    }
}

const LEXICON: &[(Class, &[&str])] = &[
    (
        Class::Noun,
        &[
            "dog", "cat", "man", "woman", "child", "house", "car", "tree", "book", "river", "city",
            "garden", "table", "letter", "song", "friend",
        ],
    ),
    (Class::Pron, &["he", "she", "they", "we"]),
    (
        Class::TransVerb,
        &[
            "saw", "found", "liked", "took", "made", "wanted", "kept", "painted",
        ],
    ),
    (
        Class::IntransVerb,
        &["slept", "ran", "left", "arrived", "laughed"],
    ),
    (
        Class::Adj,
        &[
            "big", "small", "old", "new", "red", "happy", "dark", "quiet",
        ],
    ),
    (Class::Det, &["the", "a", "this"]),
    (Class::Adp, &["in", "on", "near", "with", "under"]),
    (
        Class::Adv,
        &["quickly", "often", "today", "then", "meanwhile", "soon"],
    ),
    (Class::Aux, &["has", "will", "did"]),
    (Class::Punct, &["."]),
];

/// Source words that translate into two target words.
const SPLIT_WORDS: &[&str] = &["meanwhile", "soon"];

/// Clusters per word class; translation pairs share a cluster.
const CLUSTERS_PER_CLASS: usize = 4;

#[derive(Clone, Debug)]
struct Entry {
    class: Class,
    source: String,
    /// Empty for words the target language does not express.
    target: Vec<String>,
    cluster: u32,
}

fn reversed(word: &str) -> String {
    word.chars().rev().collect()
}

fn translate_word(class: Class, word: &str) -> Vec<String> {
    match class {
        Class::Aux => Vec::new(),
        Class::Punct => vec![word.to_owned()],
        _ if SPLIT_WORDS.contains(&word) => {
            let mid = word.len() / 2;
            vec![
                format!("{}{}", reversed(&word[..mid]), class.suffix()),
                format!("{}{}", reversed(&word[mid..]), class.suffix()),
            ]
        }
        _ => vec![format!("{}{}", reversed(word), class.suffix())],
    }
}

/// An artificial source language and its "translation".
///
/// Source sentences come from a small template grammar of simple
/// clauses (subject, optional auxiliary, verb, object or prepositional
/// phrase, adverb). The target language differs in four ways:
///
/// * every word has a different form (two words for a few adverbs);
/// * auxiliaries are not expressed;
/// * adjectives follow their noun and adpositions follow their noun
///   phrase;
/// * a clause-final adverb comes right after the verb.
///
/// Gold target trees keep the source arcs, so translating a source tree
/// with its exact alignment at ratio 1 yields the gold target tree.
#[derive(Clone, Debug)]
pub struct SyntheticLanguage {
    entries: Vec<Entry>,
    by_class: HashMap<Class, Vec<usize>>,
}

impl Default for SyntheticLanguage {
    fn default() -> Self {
        Self::new()
    }
}

/// Parallel sentences with gold trees on both sides.
#[derive(Clone, Debug, Default)]
pub struct ParallelCorpus {
    pub source: Treebank,
    pub target: Treebank,
    pub pairs: Vec<SentencePair>,
    pub matrices: Vec<AlignmentMatrix>,
    /// Correct source position (1-based) of every target word.
    pub alignments: Vec<Vec<usize>>,
    /// Target words whose best alignment was corrupted.
    pub noisy_words: usize,
    pub target_words: usize,
}

struct Node {
    entry: usize,
    head: Option<usize>,
    deprel: &'static str,
}

/// Words of one sentence in creation order, plus both linearizations.
#[derive(Default)]
struct Builder {
    nodes: Vec<Node>,
}

type Phrase = (Vec<usize>, Vec<usize>);

impl Builder {
    fn add(&mut self, entry: usize, head: Option<usize>, deprel: &'static str) -> usize {
        self.nodes.push(Node {
            entry,
            head,
            deprel,
        });
        self.nodes.len() - 1
    }
}

struct Sentence {
    source: DependencyTree,
    target: DependencyTree,
    pair: SentencePair,
    /// Source token id (1-based) of every target word.
    alignment: Vec<usize>,
}

impl SyntheticLanguage {
    pub fn new() -> Self {
        let mut entries = Vec::new();
        let mut by_class: HashMap<Class, Vec<usize>> = HashMap::new();
        for (class_idx, &(class, words)) in LEXICON.iter().enumerate() {
            for (k, word) in words.iter().enumerate() {
                by_class.entry(class).or_default().push(entries.len());
                entries.push(Entry {
                    class,
                    source: (*word).to_owned(),
                    target: translate_word(class, word),
                    cluster: (class_idx * CLUSTERS_PER_CLASS + k % CLUSTERS_PER_CLASS) as u32,
                });
            }
        }
        SyntheticLanguage { entries, by_class }
    }

    fn pick<R: Rng>(&self, rng: &mut R, class: Class) -> usize {
        *self.by_class[&class].choose(rng).unwrap()
    }

    /// Noun phrase headed by a new noun attached to `head`.
    fn noun_phrase<R: Rng>(
        &self,
        rng: &mut R,
        b: &mut Builder,
        head: usize,
        deprel: &'static str,
        pp_prob: f64,
    ) -> (usize, Phrase) {
        let noun = b.add(self.pick(rng, Class::Noun), Some(head), deprel);
        let det = rng
            .gen_bool(0.85)
            .then(|| b.add(self.pick(rng, Class::Det), Some(noun), "det"));
        let adj_count = if rng.gen_bool(0.35) {
            1 + rng.gen_bool(0.25) as usize
        } else {
            0
        };
        let adjs: Vec<usize> = (0..adj_count)
            .map(|_| b.add(self.pick(rng, Class::Adj), Some(noun), "amod"))
            .collect();

        let mut src: Vec<usize> = det.into_iter().collect();
        src.extend(&adjs);
        src.push(noun);
        let mut tgt: Vec<usize> = det.into_iter().collect();
        tgt.push(noun);
        tgt.extend(&adjs);

        if rng.gen_bool(pp_prob) {
            let (pp_src, pp_tgt) = self.adpositional_phrase(rng, b, noun, "nmod");
            src.extend(pp_src);
            tgt.extend(pp_tgt);
        }
        (noun, (src, tgt))
    }

    fn adpositional_phrase<R: Rng>(
        &self,
        rng: &mut R,
        b: &mut Builder,
        head: usize,
        deprel: &'static str,
    ) -> Phrase {
        let (noun, (np_src, np_tgt)) = self.noun_phrase(rng, b, head, deprel, 0.0);
        let adp = b.add(self.pick(rng, Class::Adp), Some(noun), "case");
        let mut src = vec![adp];
        src.extend(np_src);
        let mut tgt = np_tgt;
        tgt.push(adp);
        (src, tgt)
    }

    fn clause<R: Rng>(&self, rng: &mut R, b: &mut Builder) -> Phrase {
        let transitive = rng.gen_bool(0.6);
        let verb_class = if transitive {
            Class::TransVerb
        } else {
            Class::IntransVerb
        };
        let verb = b.add(self.pick(rng, verb_class), None, "root");

        let fronted = rng
            .gen_bool(0.15)
            .then(|| b.add(self.pick(rng, Class::Adv), Some(verb), "advmod"));

        let subject = if rng.gen_bool(0.3) {
            let pron = b.add(self.pick(rng, Class::Pron), Some(verb), "nsubj");
            (vec![pron], vec![pron])
        } else {
            self.noun_phrase(rng, b, verb, "nsubj", 0.15).1
        };

        let aux = rng
            .gen_bool(0.35)
            .then(|| b.add(self.pick(rng, Class::Aux), Some(verb), "aux"));

        let complement = if transitive {
            self.noun_phrase(rng, b, verb, "obj", 0.2).1
        } else if rng.gen_bool(0.5) {
            self.adpositional_phrase(rng, b, verb, "obl")
        } else {
            (Vec::new(), Vec::new())
        };

        let trailing = (fronted.is_none() && rng.gen_bool(0.4))
            .then(|| b.add(self.pick(rng, Class::Adv), Some(verb), "advmod"));
        let punct = b.add(self.pick(rng, Class::Punct), Some(verb), "punct");

        let mut src: Vec<usize> = fronted.into_iter().collect();
        src.extend(&subject.0);
        src.extend(aux);
        src.push(verb);
        src.extend(&complement.0);
        src.extend(trailing);
        src.push(punct);

        let mut tgt: Vec<usize> = fronted.into_iter().collect();
        tgt.extend(&subject.1);
        tgt.push(verb);
        tgt.extend(trailing);
        tgt.extend(&complement.1);
        tgt.push(punct);

        (src, tgt)
    }

    fn sentence<R: Rng>(&self, rng: &mut R, id: &str) -> Sentence {
        let mut b = Builder::default();
        let (src_order, tgt_order) = self.clause(rng, &mut b);

        let mut src_pos = vec![0; b.nodes.len()];
        for (k, &w) in src_order.iter().enumerate() {
            src_pos[w] = k + 1;
        }
        let source_tokens = src_order
            .iter()
            .map(|&w| {
                let node = &b.nodes[w];
                let entry = &self.entries[node.entry];
                Token::new(
                    entry.source.clone(),
                    entry.class.upos(),
                    node.head.map_or(0, |h| src_pos[h]),
                    node.deprel,
                )
            })
            .collect();

        // Target positions of the first piece of every word.
        let mut tgt_pos = vec![0; b.nodes.len()];
        let mut pieces = Vec::new();
        for &w in &tgt_order {
            let entry = &self.entries[b.nodes[w].entry];
            for piece in &entry.target {
                if tgt_pos[w] == 0 {
                    tgt_pos[w] = pieces.len() + 1;
                }
                pieces.push((w, piece.clone()));
            }
        }

        let target_tokens = pieces
            .iter()
            .enumerate()
            .map(|(j, (w, form))| {
                let node = &b.nodes[*w];
                let entry = &self.entries[node.entry];
                let head = node.head.map_or(0, |h| tgt_pos[h]);
                debug_assert!(node.head.is_none() || head > 0, "head is not expressed");
                Token::new(form.clone(), entry.class.upos(), head, node.deprel).with_lang(
                    Lang::Target {
                        origin_index: j + 1,
                    },
                )
            })
            .collect();

        let source = DependencyTree::new(id, source_tokens);
        let target = DependencyTree::new(id, target_tokens);
        let pair = SentencePair::new(
            id,
            source
                .forms()
                .into_iter()
                .map(String::from)
                .collect::<Vec<_>>(),
            pieces.iter().map(|(_, f)| f.clone()).collect::<Vec<_>>(),
        );
        let alignment = pieces.iter().map(|(w, _)| src_pos[*w]).collect();

        Sentence {
            source,
            target,
            pair,
            alignment,
        }
    }

    /// Generate `count` parallel sentences with ids `{prefix}{k}`.
    ///
    /// A fraction `noise` of the target words get a wrong best alignment
    /// with lower confidence than a typical correct one; the correct
    /// source word keeps some probability mass.
    pub fn corpus<R: Rng>(
        &self,
        rng: &mut R,
        prefix: &str,
        count: usize,
        noise: f64,
    ) -> ParallelCorpus {
        let mut corpus = ParallelCorpus::default();
        let mut sources = Vec::with_capacity(count);
        let mut targets = Vec::with_capacity(count);

        for k in 0..count {
            let id = format!("{}{}", prefix, k + 1);
            let sentence = self.sentence(rng, &id);
            let (matrix, noisy) =
                noisy_matrix(rng, &id, sentence.source.len(), &sentence.alignment, noise);

            corpus.noisy_words += noisy;
            corpus.target_words += sentence.alignment.len();
            corpus.alignments.push(sentence.alignment);
            corpus.pairs.push(sentence.pair);
            corpus.matrices.push(matrix);
            sources.push(sentence.source);
            targets.push(sentence.target);
        }

        corpus.source = Treebank::new(sources);
        corpus.target = Treebank::new(targets);
        corpus
    }

    /// Cross-lingual embeddings: a word and its translation are close,
    /// and words of the same class share a centroid.
    pub fn embeddings<R: Rng>(&self, rng: &mut R, dim: usize) -> EmbeddingTable {
        let unit = Normal::new(0.0, 1.0).unwrap();
        let word_spread = Normal::new(0.0, 0.6).unwrap();
        let language_spread = Normal::new(0.0, 0.1).unwrap();

        let centroids: HashMap<Class, Vec<f64>> = Class::ALL
            .iter()
            .map(|&class| (class, (0..dim).map(|_| unit.sample(rng)).collect()))
            .collect();

        let mut vectors = Vec::new();
        for entry in &self.entries {
            let base: Vec<f64> = centroids[&entry.class]
                .iter()
                .map(|c| c + word_spread.sample(rng))
                .collect();
            let jitter = |rng: &mut R| -> Vec<f64> {
                base.iter()
                    .map(|v| v + language_spread.sample(rng))
                    .collect()
            };

            vectors.push((entry.source.clone(), jitter(rng)));
            for piece in &entry.target {
                if *piece != entry.source {
                    vectors.push((piece.clone(), jitter(rng)));
                }
            }
        }
        EmbeddingTable::new(dim, vectors)
    }

    /// Cross-lingual clusters shared by a word and its translation.
    pub fn clusters(&self) -> ClusterMap {
        let mut map = HashMap::new();
        for entry in &self.entries {
            map.insert(entry.source.clone(), entry.cluster);
            for piece in &entry.target {
                map.insert(piece.clone(), entry.cluster);
            }
        }
        ClusterMap::new(map)
    }
}

/// Alignment probabilities for a sentence pair with known correct
/// alignment. Returns the matrix and the number of corrupted columns.
fn noisy_matrix<R: Rng>(
    rng: &mut R,
    id: &str,
    n: usize,
    alignment: &[usize],
    noise: f64,
) -> (AlignmentMatrix, usize) {
    let m = alignment.len();
    let mut probs = Array2::zeros((n + 1, m));
    let mut noisy = 0;

    for (j, &gold) in alignment.iter().enumerate() {
        let mut weights: Vec<f64> = (0..=n).map(|_| rng.gen_range(0.0..0.15)).collect();
        weights[0] = rng.gen_range(0.05..0.3);

        if n > 1 && rng.gen_bool(noise) {
            let mut wrong = rng.gen_range(1..n);
            if wrong >= gold {
                wrong += 1;
            }
            weights[wrong] = 1.0;
            weights[gold] = rng.gen_range(0.4..0.9);
            noisy += 1;
        } else {
            weights[gold] = 1.0;
        }

        let total: f64 = weights.iter().sum();
        for (i, w) in weights.into_iter().enumerate() {
            probs[[i, j]] = w / total;
        }
    }

    let matrix = AlignmentMatrix::new(id, probs).expect("columns are normalized");
    (matrix, noisy)
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::translate::{translate_tree, CodeMixConfig};

    #[test]
    fn forms_are_unique_across_languages() {
        let lang = SyntheticLanguage::new();
        let mut seen = HashSet::new();
        for entry in &lang.entries {
            assert!(seen.insert(entry.source.clone()), "{}", entry.source);
            for piece in &entry.target {
                if piece != "." {
                    assert!(seen.insert(piece.clone()), "{}", piece);
                }
            }
        }
    }

    #[test]
    fn trees_are_valid_and_aligned() {
        let lang = SyntheticLanguage::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let corpus = lang.corpus(&mut rng, "s", 300, 0.2);
        for k in 0..corpus.source.len() {
            let src = &corpus.source.trees()[k];
            let tgt = &corpus.target.trees()[k];
            assert!(src.is_valid(), "{:?}", src);
            assert!(tgt.is_valid(), "{:?}", tgt);
            assert_eq!(corpus.pairs[k].source.len(), src.len());
            assert_eq!(corpus.pairs[k].target, tgt.forms());
            assert_eq!(corpus.matrices[k].m(), tgt.len());
        }

        let rate = corpus.noisy_words as f64 / corpus.target_words as f64;
        assert!((rate - 0.2).abs() < 0.03, "noise rate {}", rate);
    }

    #[test]
    fn clean_full_translation_is_the_target_tree() {
        let lang = SyntheticLanguage::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let corpus = lang.corpus(&mut rng, "s", 200, 0.0);
        let config = CodeMixConfig::new(1.0).unwrap();
        for k in 0..corpus.source.len() {
            let out = translate_tree(
                &corpus.source.trees()[k],
                &corpus.matrices[k],
                &corpus.pairs[k],
                &config,
            )
            .unwrap();
            assert_eq!(out, corpus.target.trees()[k]);
        }
    }

    #[test]
    fn corrupted_columns_have_wrong_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let alignment = [3, 1, 2, 5, 4, 4];
        for _ in 0..50 {
            let (clean, none) = noisy_matrix(&mut rng, "c", 5, &alignment, 0.0);
            let (noisy, all) = noisy_matrix(&mut rng, "n", 5, &alignment, 1.0);
            assert_eq!((none, all), (0, alignment.len()));
            for (j, &gold) in alignment.iter().enumerate() {
                assert_eq!(clean.best_alignments()[j].0, gold);
                let (best, p) = noisy.best_alignments()[j];
                assert!(best != gold && best != 0);
                assert!(noisy.prob(gold, j + 1) < p);
            }
        }
    }

    #[test]
    fn resources_cover_both_languages() {
        let lang = SyntheticLanguage::new();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let corpus = lang.corpus(&mut rng, "s", 50, 0.2);
        let table = lang.embeddings(&mut rng, 16);
        let clusters = lang.clusters();
        for tree in corpus.source.trees().iter().chain(corpus.target.trees()) {
            for token in &tree.tokens {
                assert!(table.index_of(&token.form).is_some(), "{}", token.form);
                assert!(clusters.get(&token.form).is_some());
            }
        }
        assert_eq!(clusters.get("dog"), clusters.get("godo"));
    }
}
