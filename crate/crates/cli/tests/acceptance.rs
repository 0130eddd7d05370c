//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 7 and 9 are measurements of the synthetic transfer
//! experiment. Their lines are printed like the others, but only the
//! remaining criteria decide the exit status.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use codemix::alignment::{AlignmentMatrix, SentencePair};
use codemix::conllu::{validate_tree, DependencyTree, Lang, Token, Treebank};
use codemix::eval::{ablation, score, sweep_lambda, ExperimentData, SweepConfig, ABLATION_ROWS};
use codemix::parser::{decode_mst, parse_tree, train, Indexer, ParserConfig, ParserModel, Vocab};
use codemix::resources::Resources;
use codemix::synthetic::{random_instance, random_tree, SyntheticLanguage};
use codemix::translate::{translate_tree, CodeMixConfig};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

fn grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

fn config(lambda: f64, deletion: bool, reordering: bool) -> CodeMixConfig {
    CodeMixConfig {
        lambda,
        enable_deletion: deletion,
        enable_reordering: reordering,
        seed: 0,
    }
}

// 1 --------------------------------------------------------------------

fn tree_validity() -> Outcome {
    let start = Instant::now();
    let mut failures = 0;
    let mut runs = 0;
    for (step, lambda) in grid().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + step as u64);
        let config = CodeMixConfig::new(lambda).unwrap();
        for k in 0..1000 {
            let inst = random_instance(&mut rng, &format!("r{}", k), 15, 18);
            let out = translate_tree(&inst.tree, &inst.matrix, &inst.pair, &config).unwrap();
            runs += 1;
            if !validate_tree(&out).is_empty() {
                failures += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        failures == 0 && secs < 30.0,
        format!(
            "{} instances, {} invalid, {:.1}s (limit 30s)",
            runs, failures, secs
        ),
    )
}

// 2 --------------------------------------------------------------------

/// Best head of every target column, computed directly from the matrix;
/// the null word wins ties.
fn best_rows(matrix: &AlignmentMatrix) -> Vec<usize> {
    (1..=matrix.m())
        .map(|j| {
            let mut best = 0;
            for i in 1..=matrix.n() {
                if matrix.prob(i, j) > matrix.prob(best, j) {
                    best = i;
                }
            }
            best
        })
        .collect()
}

fn boundaries() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2000);
    let mut problems = Vec::new();
    let instances: Vec<_> = (0..11_000)
        .map(|k| random_instance(&mut rng, &format!("b{}", k), 15, 18))
        .collect();

    for inst in &instances {
        let out = translate_tree(
            &inst.tree,
            &inst.matrix,
            &inst.pair,
            &CodeMixConfig::new(0.0).unwrap(),
        )
        .unwrap();
        if out != inst.tree {
            problems.push(format!("{}: ratio 0 changed the tree", inst.tree.sent_id));
        }
    }

    for inst in &instances {
        let tree = &inst.tree;
        let rows = best_rows(&inst.matrix);
        let aligned: BTreeSet<usize> = rows.iter().copied().filter(|&i| i > 0).collect();
        let expected_targets: BTreeSet<usize> =
            (1..=rows.len()).filter(|&j| rows[j - 1] > 0).collect();
        let expected_sources: BTreeSet<String> = (1..=tree.len())
            .filter(|i| !aligned.contains(i))
            .filter(|&i| tree.token(i).head == 0)
            .map(|i| tree.token(i).form.clone())
            .collect();

        let out = translate_tree(
            tree,
            &inst.matrix,
            &inst.pair,
            &CodeMixConfig::new(1.0).unwrap(),
        )
        .unwrap();
        let targets: BTreeSet<usize> = out
            .tokens
            .iter()
            .filter_map(|t| t.lang.origin_index())
            .collect();
        let sources: BTreeSet<String> = out
            .tokens
            .iter()
            .filter(|t| !t.lang.is_target())
            .map(|t| t.form.clone())
            .collect();
        let target_tokens = out.tokens.iter().filter(|t| t.lang.is_target()).count();
        if targets != expected_targets || target_tokens != expected_targets.len() {
            problems.push(format!(
                "{}: substituted {:?}, expected {:?}",
                tree.sent_id, targets, expected_targets
            ));
        }
        if sources != expected_sources {
            problems.push(format!(
                "{}: kept {:?}, expected {:?}",
                tree.sent_id, sources, expected_sources
            ));
        }
    }

    let detail = match problems.first() {
        None => format!("{} instances at ratios 0 and 1", instances.len()),
        Some(first) => format!("{} problems, first: {}", problems.len(), first),
    };
    Outcome::new(problems.is_empty(), detail)
}

// 3 --------------------------------------------------------------------

fn tree(spec: &[(&str, &str, usize, &str)]) -> DependencyTree {
    DependencyTree::new(
        "s",
        spec.iter()
            .map(|&(form, upos, head, rel)| Token::new(form, upos, head, rel))
            .collect(),
    )
}

type Arc = (String, String, String);

fn arcs(tree: &DependencyTree) -> BTreeSet<Arc> {
    tree.tokens
        .iter()
        .map(|t| {
            let head = if t.head == 0 {
                "ROOT".to_owned()
            } else {
                tree.token(t.head).form.clone()
            };
            (head, t.form.clone(), t.deprel.clone())
        })
        .collect()
}

fn arc_set(list: &[(&str, &str, &str)]) -> BTreeSet<Arc> {
    list.iter()
        .map(|&(h, d, r)| (h.to_owned(), d.to_owned(), r.to_owned()))
        .collect()
}

fn figure_replays() -> Outcome {
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failed.push(name.to_owned());
        }
    };

    // one-to-one: only "it" -> "den" is chosen
    let source = tree(&[
        ("we", "PRON", 3, "nsubj"),
        ("have", "AUX", 3, "aux"),
        ("found", "VERB", 0, "root"),
        ("it", "PRON", 3, "dobj"),
    ]);
    let pair = SentencePair::new(
        "s",
        ["we", "have", "found", "it"],
        ["vi", "har", "hittat", "den"],
    );
    let matrix = AlignmentMatrix::new(
        "s",
        array![
            [0.1, 0.2, 0.1, 0.05],
            [0.6, 0.1, 0.1, 0.0],
            [0.1, 0.5, 0.1, 0.0],
            [0.1, 0.1, 0.7, 0.05],
            [0.1, 0.1, 0.0, 0.9]
        ],
    )
    .unwrap();
    let out = translate_tree(&source, &matrix, &pair, &config(0.25, true, true)).unwrap();
    check(
        "one-to-one",
        arcs(&out)
            == arc_set(&[
                ("found", "we", "nsubj"),
                ("found", "have", "aux"),
                ("ROOT", "found", "root"),
                ("found", "den", "dobj"),
            ])
            && out.token(4).lang == Lang::Target { origin_index: 4 }
            && out.token(4).upos == "PRON",
    );

    // many-to-one: "Meanwhile" -> "under tiden"
    let source = tree(&[
        ("Meanwhile", "ADV", 4, "advmod"),
        ("we", "PRON", 4, "nsubj"),
        ("have", "AUX", 4, "aux"),
        ("found", "VERB", 0, "root"),
        ("it", "PRON", 4, "obj"),
    ]);
    let pair = SentencePair::new(
        "s",
        ["Meanwhile", "we", "have", "found", "it"],
        ["under", "tiden", "har", "vi", "hittat", "den"],
    );
    let matrix = AlignmentMatrix::new(
        "s",
        array![
            [0.1, 0.1, 0.1, 0.1, 0.1, 0.1],
            [0.6, 0.7, 0.0, 0.0, 0.0, 0.0],
            [0.1, 0.1, 0.0, 0.8, 0.0, 0.0],
            [0.1, 0.0, 0.8, 0.0, 0.0, 0.0],
            [0.1, 0.1, 0.1, 0.1, 0.9, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.9]
        ],
    )
    .unwrap();
    let out = translate_tree(&source, &matrix, &pair, &config(1.0, true, true)).unwrap();
    check(
        "many-to-one",
        out.forms() == vec!["under", "tiden", "har", "vi", "hittat", "den"]
            && arcs(&out)
                == arc_set(&[
                    ("hittat", "under", "advmod"),
                    ("hittat", "tiden", "advmod"),
                    ("hittat", "vi", "nsubj"),
                    ("hittat", "har", "aux"),
                    ("ROOT", "hittat", "root"),
                    ("hittat", "den", "obj"),
                ]),
    );

    // deletion: "are" has lower retention than "being"; at 0.5 the tied
    // candidate "quickly" (highest target index) stays untranslated
    let source = tree(&[
        ("they", "PRON", 4, "nsubj:pass"),
        ("are", "AUX", 4, "aux"),
        ("being", "AUX", 4, "aux:pass"),
        ("helped", "VERB", 0, "root"),
        ("quickly", "ADV", 4, "advmod"),
    ]);
    let pair = SentencePair::new(
        "s",
        ["they", "are", "being", "helped", "quickly"],
        ["de", "hjälps", "med", "snabbt"],
    );
    let matrix = AlignmentMatrix::new(
        "s",
        array![
            [0.1, 0.1, 0.55, 0.1],
            [0.9, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.2, 0.0],
            [0.0, 0.0, 0.25, 0.0],
            [0.0, 0.9, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.9]
        ],
    )
    .unwrap();
    let out = translate_tree(&source, &matrix, &pair, &config(0.5, true, false)).unwrap();
    check(
        "deletion",
        matrix.retention(2) < matrix.retention(3)
            && arcs(&out)
                == arc_set(&[
                    ("hjälps", "de", "nsubj:pass"),
                    ("hjälps", "being", "aux:pass"),
                    ("ROOT", "hjälps", "root"),
                    ("hjälps", "quickly", "advmod"),
                ]),
    );

    // full-sentence reorder
    let source = tree(&[
        ("we", "PRON", 3, "nsubj"),
        ("must", "AUX", 3, "aux"),
        ("go", "VERB", 0, "root"),
        ("now", "ADV", 3, "advmod"),
    ]);
    let pair = SentencePair::new(
        "s",
        ["we", "must", "go", "now"],
        ["mu", "måste", "vi", "gå"],
    );
    let matrix = AlignmentMatrix::new(
        "s",
        array![
            [0.1, 0.1, 0.1, 0.1],
            [0.0, 0.0, 0.9, 0.0],
            [0.0, 0.9, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.9],
            [0.9, 0.0, 0.0, 0.0]
        ],
    )
    .unwrap();
    let plain = translate_tree(&source, &matrix, &pair, &config(1.0, true, false)).unwrap();
    let out = translate_tree(&source, &matrix, &pair, &config(1.0, true, true)).unwrap();
    check(
        "full reorder",
        plain.forms() == vec!["vi", "måste", "gå", "mu"]
            && out.forms() == vec!["mu", "måste", "vi", "gå"]
            && arcs(&out) == arcs(&plain)
            && arcs(&out)
                == arc_set(&[
                    ("gå", "vi", "nsubj"),
                    ("gå", "måste", "aux"),
                    ("ROOT", "gå", "root"),
                    ("gå", "mu", "advmod"),
                ]),
    );

    // two target spans around an untranslated word
    let source = tree(&[
        ("yesterday", "ADV", 2, "advmod"),
        ("saw", "VERB", 0, "root"),
        ("the", "DET", 5, "det"),
        ("big", "ADJ", 5, "amod"),
        ("dog", "NOUN", 2, "obj"),
    ]);
    let pair = SentencePair::new(
        "s",
        ["yesterday", "saw", "the", "big", "dog"],
        ["såg", "igår", "hunden", "stora"],
    );
    let matrix = AlignmentMatrix::new(
        "s",
        array![
            [0.1, 0.1, 0.1, 0.1],
            [0.0, 0.9, 0.0, 0.0],
            [0.9, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.1, 0.0],
            [0.0, 0.0, 0.0, 0.9],
            [0.0, 0.0, 0.8, 0.0]
        ],
    )
    .unwrap();
    let out = translate_tree(&source, &matrix, &pair, &config(1.0, false, true)).unwrap();
    check(
        "span reorder",
        out.forms() == vec!["såg", "igår", "the", "hunden", "stora"]
            && out.target_spans() == 2
            && arcs(&out)
                == arc_set(&[
                    ("ROOT", "såg", "root"),
                    ("såg", "igår", "advmod"),
                    ("hunden", "the", "det"),
                    ("hunden", "stora", "amod"),
                    ("såg", "hunden", "obj"),
                ]),
    );

    let detail = if failed.is_empty() {
        "one-to-one, many-to-one, deletion, full reorder, span reorder".to_owned()
    } else {
        format!("wrong arcs in: {}", failed.join(", "))
    };
    Outcome::new(failed.is_empty(), detail)
}

// 4 --------------------------------------------------------------------

/// Best single-root tree weight by enumerating every head vector.
fn brute_force_best(scores: &Array2<f64>) -> f64 {
    let n = scores.ncols();
    let mut best = f64::NEG_INFINITY;
    let mut heads = vec![0usize; n];
    loop {
        let single_root = heads.iter().filter(|&&h| h == 0).count() == 1;
        let no_self = heads.iter().enumerate().all(|(k, &h)| h != k + 1);
        if single_root && no_self && acyclic(&heads) {
            best = best.max(weight(scores, &heads));
        }
        // next head vector in base n + 1
        let mut k = 0;
        while k < n && heads[k] == n {
            heads[k] = 0;
            k += 1;
        }
        if k == n {
            return best;
        }
        heads[k] += 1;
    }
}

fn weight(scores: &Array2<f64>, heads: &[usize]) -> f64 {
    let mut total = 0.0;
    for (k, &h) in heads.iter().enumerate() {
        total += scores[[h, k]];
    }
    total
}

fn acyclic(heads: &[usize]) -> bool {
    (1..=heads.len()).all(|start| {
        let mut node = start;
        for _ in 0..=heads.len() {
            if node == 0 {
                return true;
            }
            node = heads[node - 1];
        }
        false
    })
}

fn mst_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4000);
    let mut mismatches = 0;
    let mut cases = 0;
    for n in 1..=5 {
        for _ in 0..200 {
            let scores = Array2::from_shape_fn((n + 1, n), |_| rng.gen_range(-5.0..5.0));
            let heads = decode_mst(&scores);
            let ok = heads.len() == n
                && heads.iter().filter(|&&h| h == 0).count() == 1
                && acyclic(&heads)
                && weight(&scores, &heads) == brute_force_best(&scores);
            mismatches += (!ok) as usize;
            cases += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        mismatches == 0 && secs < 10.0,
        format!(
            "{} matrices, {} mismatches, {:.2}s (limit 10s)",
            cases, mismatches, secs
        ),
    )
}

// 5 and 6 ----------------------------------------------------------------

const LABELS: [&str; 3] = ["dep", "nsubj", "root"];
const TAGS: [&str; 3] = ["NOUN", "VERB", "ADJ"];

fn sentence(rng: &mut ChaCha8Rng, id: &str, n: usize, forms: usize) -> DependencyTree {
    let shape = random_tree(rng, id, n);
    let tokens = shape
        .tokens
        .iter()
        .map(|t| {
            let label = if t.head == 0 {
                "root"
            } else {
                LABELS[rng.gen_range(0..2)]
            };
            Token::new(
                format!("w{}", rng.gen_range(0..forms)),
                TAGS[rng.gen_range(0..TAGS.len())],
                t.head,
                label,
            )
        })
        .collect();
    DependencyTree::new(id, tokens)
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5000);
    let trees: Vec<DependencyTree> = (0..3)
        .map(|k| sentence(&mut rng, &format!("g{}", k), 3 + k, 4))
        .collect();
    let tokens = || trees.iter().flat_map(|t| t.tokens.iter());
    let vocab = Vocab {
        words: Indexer::new(tokens().map(|t| t.form.clone()).collect::<BTreeSet<_>>()),
        pos: Vocab::pos_from(tokens()),
        labels: Indexer::new(LABELS.iter().map(|s| s.to_string())),
        cluster_count: 0,
        clusters: None,
    };
    let config = ParserConfig {
        embed_dim: 2,
        cluster_embed_dim: 1,
        pos_embed_dim: 2,
        encoder_layers: 1,
        encoder_hidden: 2,
        arc_mlp_dim: 2,
        label_mlp_dim: 2,
        dropout: 0.0,
        ..ParserConfig::default()
    };
    let mut model = ParserModel::new(config, vocab, None, &mut rng).unwrap();
    for p in model.params_mut().params_mut() {
        p.value.mapv_inplace(|v| v + rng.gen_range(-0.5..0.5));
    }
    let size = model.params().trainable_size();

    let total_loss = |m: &ParserModel| -> f64 { trees.iter().map(|t| m.loss(t).unwrap()).sum() };
    let mut analytic = model.params().zero_grads();
    for t in &trees {
        let (_, grads) = model.loss_and_gradients(t, None).unwrap();
        model.params().accumulate(&mut analytic, grads);
    }

    let step = 1e-4;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (k, grad) in analytic.iter().enumerate() {
        if !model.params().params()[k].trainable {
            continue;
        }
        let (rows, cols) = model.params().params()[k].value.dim();
        for r in 0..rows {
            for c in 0..cols {
                let original = model.params().params()[k].value[[r, c]];
                model.params_mut().params_mut()[k].value[[r, c]] = original + step;
                let plus = total_loss(&model);
                model.params_mut().params_mut()[k].value[[r, c]] = original - step;
                let minus = total_loss(&model);
                model.params_mut().params_mut()[k].value[[r, c]] = original;

                let numeric = (plus - minus) / (2.0 * step);
                let exact = grad[[r, c]];
                worst =
                    worst.max((numeric - exact).abs() / numeric.abs().max(exact.abs()).max(1e-6));
                checked += 1;
            }
        }
    }
    Outcome::new(
        worst < 1e-4 && size <= 500 && checked == size,
        format!(
            "{} parameters, max relative error {:.2e} (limit 1e-4)",
            checked, worst
        ),
    )
}

fn memorization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6000);
    let t = sentence(&mut rng, "m", 9, 9);
    let bank = Treebank::new(vec![t.clone()]);
    let config = ParserConfig {
        epochs: 50,
        learning_rate: 2e-2,
        dropout: 0.0,
        ..ParserConfig::desk()
    };
    let (model, _) = train(&bank, &Resources::default(), &config).unwrap();
    let predicted = Treebank::new(vec![parse_tree(&model, &t)]);
    let report = score(&bank, &predicted).unwrap();
    Outcome::new(
        report.uas == 100.0 && report.las == 100.0,
        format!(
            "9 tokens, 50 epochs: UAS {:.2} LAS {:.2}",
            report.uas, report.las
        ),
    )
}

// 7 and 9 ----------------------------------------------------------------

struct Experiment {
    source: Treebank,
    matrices: Vec<AlignmentMatrix>,
    pairs: Vec<SentencePair>,
    eval: Treebank,
    resources: Resources,
}

impl Experiment {
    /// 300 noisy parallel sentences and 100 clean evaluation trees, as
    /// written by `codemix synth` with its defaults.
    fn new() -> Self {
        let language = SyntheticLanguage::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let corpus = language.corpus(&mut rng, "train-", 300, 0.2);
        let held_out = language.corpus(&mut rng, "eval-", 100, 0.0);
        let embeddings = language.embeddings(&mut rng, 50);
        Experiment {
            source: corpus.source,
            matrices: corpus.matrices,
            pairs: corpus.pairs,
            eval: held_out.target,
            resources: Resources {
                embeddings: Some(embeddings),
                clusters: Some(language.clusters()),
            },
        }
    }

    fn data(&self) -> ExperimentData<'_> {
        ExperimentData {
            source: &self.source,
            matrices: &self.matrices,
            pairs: &self.pairs,
            resources: &self.resources,
            eval: &self.eval,
        }
    }

    fn parser() -> ParserConfig {
        ParserConfig {
            epochs: 50,
            ..ParserConfig::desk()
        }
    }
}

const TRIALS: usize = 5;

fn transfer(experiment: &Experiment) -> (Outcome, f64) {
    let config = SweepConfig {
        grid: vec![0.0, 0.7, 1.0],
        trials: TRIALS,
        codemix: CodeMixConfig::default(),
        parser: Experiment::parser(),
        jobs: 1,
    };
    let report = sweep_lambda(&experiment.data(), &config).unwrap();
    let las: Vec<f64> = report.rows.iter().map(|r| r.las_mean).collect();
    let (src, mix, tgt) = (las[0], las[1], las[2]);
    let passed = mix - tgt >= 1.0 && mix - src >= 1.0;
    (
        Outcome::new(
            passed,
            format!(
                "mean LAS over {} seeds: Src {:.2}, Mix {:.2}, Tgt {:.2}; Mix-Src {:+.2}, Mix-Tgt {:+.2} (need +1.00 each)",
                TRIALS,
                src,
                mix,
                tgt,
                mix - src,
                mix - tgt
            ),
        ),
        mix,
    )
}

fn ablation_rows(experiment: &Experiment, mix_from_sweep: f64) -> Outcome {
    let rows = ablation(&experiment.data(), 0.7, TRIALS, &Experiment::parser(), 1).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.name.as_str()).collect();
    let expected: Vec<&str> = ABLATION_ROWS.iter().map(|r| r.0).collect();
    let las: Vec<f64> = rows.iter().map(|r| r.result.las_mean).collect();
    let structure =
        names == expected && names == ["Mix", "-Sentence Reordering", "-Word Deletion", "-Both"];
    let consistent = las[0] == mix_from_sweep;
    Outcome::new(
        structure && consistent && las[0] >= las[3],
        format!(
            "rows {:?}; LAS {}; Mix row equals plain run: {}",
            names,
            las.iter()
                .map(|v| format!("{:.2}", v))
                .collect::<Vec<_>>()
                .join(" / "),
            consistent
        ),
    )
}

// 8 --------------------------------------------------------------------

/// Gold and predicted sentences as `UPOS:head:label` tokens.
const EVAL_CASES: [(&str, &str); 20] = [
    ("PRON:2:nsubj VERB:0:root PUNCT:2:punct", "PRON:2:nsubj VERB:0:root PUNCT:2:punct"),
    ("PRON:2:nsubj VERB:0:root NOUN:2:obj", "PRON:2:nsubj VERB:0:root NOUN:2:iobj"),
    ("DET:2:det NOUN:3:nsubj VERB:0:root", "DET:3:det NOUN:3:nsubj VERB:0:root"),
    ("NOUN:0:root ADJ:1:amod", "NOUN:2:amod ADJ:0:root"),
    ("VERB:0:root PUNCT:1:punct", "VERB:0:root PUNCT:0:root"),
    ("VERB:0:root", "VERB:0:dep"),
    (
        "PRON:3:nsubj AUX:3:aux VERB:0:root PRON:3:obj PUNCT:3:punct",
        "PRON:3:nsubj AUX:3:aux VERB:0:root PRON:1:obj PUNCT:4:punct",
    ),
    ("NOUN:2:nsubj VERB:0:root ADV:2:advmod", "NOUN:2:obj VERB:0:dep ADV:2:obl"),
    ("PUNCT:2:punct INTJ:0:root PUNCT:2:punct", "PUNCT:0:root INTJ:1:dep PUNCT:1:punct"),
    (
        "DET:2:det ADJ:3:amod NOUN:5:nsubj ADV:5:advmod VERB:0:root ADP:7:case NOUN:5:obl PUNCT:5:punct",
        "DET:3:det ADJ:3:amod NOUN:5:nsubj ADV:3:advmod VERB:0:root ADP:7:case NOUN:5:obj PUNCT:5:punct",
    ),
    ("NUM:2:nummod NOUN:0:root", "NUM:2:nummod NOUN:0:root"),
    (
        "PROPN:2:nsubj VERB:0:root PROPN:2:obj PUNCT:2:punct",
        "PROPN:3:nsubj VERB:0:root PROPN:2:nsubj PUNCT:3:punct",
    ),
    ("SCONJ:3:mark PRON:3:nsubj VERB:0:root", "SCONJ:2:mark PRON:3:nsubj VERB:0:root"),
    ("CCONJ:2:cc NOUN:3:conj NOUN:0:root", "CCONJ:3:cc NOUN:3:conj NOUN:0:root"),
    (
        "VERB:0:root PUNCT:1:punct PUNCT:1:punct VERB:1:parataxis",
        "VERB:0:root PUNCT:4:punct PUNCT:4:punct VERB:1:conj",
    ),
    ("AUX:2:cop ADJ:0:root", "AUX:0:root ADJ:1:dep"),
    (
        "PRON:2:nsubj VERB:0:root DET:4:det NOUN:2:obj ADP:6:case NOUN:4:nmod",
        "PRON:2:nsubj VERB:0:root DET:4:det NOUN:2:obj ADP:6:case NOUN:2:obl",
    ),
    ("X:0:root", "X:0:root"),
    ("NOUN:3:nsubj PUNCT:1:punct VERB:0:root", "NOUN:3:nsubj PUNCT:3:punct VERB:0:root"),
    (
        "ADV:3:advmod PRON:3:nsubj VERB:0:root NOUN:3:obj PUNCT:3:punct",
        "ADV:4:advmod PRON:3:expl VERB:0:root NOUN:3:obj PUNCT:3:punct",
    ),
];

fn hand_tree(id: &str, spec: &str) -> DependencyTree {
    let tokens = spec
        .split_whitespace()
        .enumerate()
        .map(|(k, item)| {
            let parts: Vec<&str> = item.split(':').collect();
            Token::new(
                format!("w{}", k + 1),
                parts[0],
                parts[1].parse().unwrap(),
                parts[2],
            )
        })
        .collect();
    DependencyTree::new(id, tokens)
}

fn evaluator() -> Outcome {
    let mut failures = Vec::new();
    for (k, (gold, pred)) in EVAL_CASES.iter().enumerate() {
        let id = format!("case-{}", k + 1);
        let g = hand_tree(&id, gold);
        let p = hand_tree(&id, pred);

        let (mut total, mut heads, mut both) = (0usize, 0usize, 0usize);
        for (a, b) in g.tokens.iter().zip(&p.tokens) {
            if a.upos == "PUNCT" {
                continue;
            }
            total += 1;
            if a.head == b.head {
                heads += 1;
                if a.deprel == b.deprel {
                    both += 1;
                }
            }
        }
        let uas = 100.0 * heads as f64 / total as f64;
        let las = 100.0 * both as f64 / total as f64;

        let report = score(&Treebank::new(vec![g.clone()]), &Treebank::new(vec![p])).unwrap();
        let ok = report.uas == uas
            && report.las == las
            && report.las <= report.uas
            && report.evaluated_tokens == total
            && report.evaluated_tokens + report.excluded_tokens == g.len();
        if !ok {
            failures.push(id);
        }
    }
    let detail = if failures.is_empty() {
        format!("{} cases agree with the recount", EVAL_CASES.len())
    } else {
        format!("disagreement in {}", failures.join(", "))
    };
    Outcome::new(failures.is_empty(), detail)
}

// 10 -------------------------------------------------------------------

fn run(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_codemix"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "codemix {:?}: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

/// Every output of a short pipeline, in order.
fn pipeline(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let p = |name: &str| dir.join(name).to_str().unwrap().to_owned();
    let data = p("data");
    let manifest = format!("{}/manifest.txt", data);
    let mut outputs = Vec::new();

    outputs.push((
        "synth".to_owned(),
        run(&[
            "synth",
            "--out-dir",
            &data,
            "--train-size",
            "30",
            "--eval-size",
            "10",
            "--embed-dim",
            "8",
            "--seed",
            "3",
        ]),
    ));
    for name in [
        "source.conllu",
        "target.conllu",
        "eval.conllu",
        "pairs.tsv",
        "alignments.jsonl",
        "embeddings.vec",
        "clusters.tsv",
    ] {
        outputs.push((
            name.to_owned(),
            fs::read(format!("{}/{}", data, name)).unwrap(),
        ));
    }

    let mixed = p("mixed.conllu");
    outputs.push((
        "translate".to_owned(),
        run(&[
            "translate",
            "--manifest",
            &manifest,
            "--lambda",
            "0.7",
            "--out",
            &mixed,
            "--stats",
            &p("stats.json"),
        ]),
    ));
    outputs.push(("mixed.conllu".to_owned(), fs::read(&mixed).unwrap()));
    outputs.push(("stats.json".to_owned(), fs::read(p("stats.json")).unwrap()));

    let model = p("model.bin");
    let parser_flags = ["--desk", "--epochs", "2", "--seed", "5"];
    let mut train = vec![
        "train",
        "--manifest",
        &manifest,
        "--train",
        &mixed,
        "--model",
        &model,
    ];
    train.extend(parser_flags);
    outputs.push(("train".to_owned(), run(&train)));
    outputs.push(("model.bin".to_owned(), fs::read(&model).unwrap()));

    let eval = format!("{}/eval.conllu", data);
    outputs.push((
        "parse".to_owned(),
        run(&["parse", "--model", &model, "--input", &eval]),
    ));
    let parsed = p("parsed.conllu");
    run(&[
        "parse", "--model", &model, "--input", &eval, "--out", &parsed,
    ]);
    outputs.push(("eval".to_owned(), run(&["eval", &eval, &parsed, "--json"])));
    outputs.push(("mix".to_owned(), run(&["mix", &mixed, &eval])));

    let mut sweep = vec![
        "sweep",
        "--manifest",
        &manifest,
        "--grid",
        "0,1",
        "--trials",
        "2",
    ];
    sweep.extend(parser_flags);
    outputs.push(("sweep".to_owned(), run(&sweep)));

    let ablation_json = p("ablation.json");
    let mut ablate = vec!["ablate", "--manifest", &manifest, "--out", &ablation_json];
    ablate.extend(parser_flags);
    outputs.push(("ablate".to_owned(), run(&ablate)));
    outputs.push((
        "ablation.json".to_owned(),
        fs::read(&ablation_json).unwrap(),
    ));
    outputs
}

fn determinism() -> Outcome {
    let first = TempDir::new().unwrap();
    let second = TempDir::new().unwrap();
    let a = pipeline(first.path());
    let b = pipeline(second.path());
    // Paths appear in some messages; compare with the directory masked.
    let mask = |outputs: Vec<(String, Vec<u8>)>, dir: &Path| -> Vec<(String, Vec<u8>)> {
        let dir = dir.to_str().unwrap();
        outputs
            .into_iter()
            .map(|(name, bytes)| match String::from_utf8(bytes) {
                Ok(text) => (name, text.replace(dir, "<dir>").into_bytes()),
                Err(err) => (name, err.into_bytes()),
            })
            .collect()
    };
    let a = mask(a, first.path());
    let b = mask(b, second.path());
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x.1 != y.1)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let detail = if differing.is_empty() {
        format!("{} outputs of synth/translate/train/parse/eval/mix/sweep/ablate identical across two runs", a.len())
    } else {
        format!("different outputs: {}", differing.join(", "))
    };
    Outcome::new(differing.is_empty(), detail)
}

// ----------------------------------------------------------------------

fn report(number: usize, title: &str, enforced: bool, outcome: &Outcome, secs: f64) {
    let verdict = if outcome.passed { "PASS" } else { "FAIL" };
    let note = if enforced || outcome.passed {
        ""
    } else {
        " [reported, not enforced]"
    };
    println!(
        "{} criterion {:>2} {}: {} ({:.1}s){}",
        verdict, number, title, outcome.detail, secs, note
    );
}

fn main() -> ExitCode {
    let mut enforced_failures = 0;
    let mut timed = |number: usize, title: &str, enforced: bool, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        report(
            number,
            title,
            enforced,
            &outcome,
            start.elapsed().as_secs_f64(),
        );
        if enforced && !outcome.passed {
            enforced_failures += 1;
        }
    };

    timed(1, "tree validity", true, &mut tree_validity);
    timed(2, "boundary ratios", true, &mut boundaries);
    timed(3, "worked examples", true, &mut figure_replays);
    timed(4, "spanning tree oracle", true, &mut mst_oracle);
    timed(5, "gradient check", true, &mut gradient_check);
    timed(6, "memorization", true, &mut memorization);

    let experiment = Experiment::new();
    let mut mix_las = f64::NAN;
    timed(7, "synthetic transfer", false, &mut || {
        let (outcome, mix) = transfer(&experiment);
        mix_las = mix;
        outcome
    });
    timed(8, "evaluator recount", true, &mut evaluator);
    timed(9, "ablation", false, &mut || {
        ablation_rows(&experiment, mix_las)
    });
    timed(10, "determinism", true, &mut determinism);

    if enforced_failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{} enforced criteria failed", enforced_failures);
        ExitCode::FAILURE
    }
}
