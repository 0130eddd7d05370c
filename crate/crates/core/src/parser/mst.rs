//! Maximum spanning arborescence decoding.

use ndarray::{Array2, Array3};

/// Per-dependent log-softmax over candidate heads.
///
/// `scores` is `(n + 1) x n` with `scores[[j, i - 1]]` the score of head
/// `j` for dependent `i`. Self-attachment gets `-inf`.
pub fn log_softmax_heads(scores: &Array2<f64>) -> Array2<f64> {
    let n = scores.ncols();
    let mut out = Array2::from_elem(scores.raw_dim(), f64::NEG_INFINITY);
    for i in 1..=n {
        let column = scores.column(i - 1);
        let max = column
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        let log_total = column
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| (v - max).exp())
            .sum::<f64>()
            .ln();
        for j in (0..=n).filter(|&j| j != i) {
            out[[j, i - 1]] = column[j] - max - log_total;
        }
    }
    out
}

/// Total score of a head assignment (`heads[i - 1]` heads token `i`).
pub fn tree_score(scores: &Array2<f64>, heads: &[usize]) -> f64 {
    heads.iter().enumerate().map(|(k, &h)| scores[[h, k]]).sum()
}

/// Chu-Liu/Edmonds on a dense `(size x size)` weight matrix indexed
/// `[head][dependent]`, rooted at node 0. `-inf` marks absent edges.
/// Returns the parent of every node; `parents[0]` is 0.
fn chu_liu_edmonds(weights: &[Vec<f64>]) -> Vec<usize> {
    let size = weights.len();

    // Best incoming edge per node; ties go to the smaller head.
    let mut parents = vec![0; size];
    for v in 1..size {
        let mut best: Option<usize> = None;
        for u in (0..size).filter(|&u| u != v) {
            match best {
                None => best = Some(u),
                Some(b) if weights[u][v] > weights[b][v] => best = Some(u),
                _ => {}
            }
        }
        parents[v] = best.expect("a node needs a candidate head");
    }

    let Some(cycle) = find_cycle(&parents) else {
        return parents;
    };

    let mut in_cycle = vec![false; size];
    for &v in &cycle {
        in_cycle[v] = true;
    }

    // Contract the cycle into a single node (the last index).
    let outside: Vec<usize> = (0..size).filter(|&v| !in_cycle[v]).collect();
    let mut new_index = vec![usize::MAX; size];
    for (k, &v) in outside.iter().enumerate() {
        new_index[v] = k;
    }
    let contracted = outside.len();
    let new_size = contracted + 1;

    let mut reduced = vec![vec![f64::NEG_INFINITY; new_size]; new_size];
    // For an edge into the cycle from u: which cycle node it enters.
    let mut enters = vec![usize::MAX; new_size];
    // For an edge out of the cycle to v: which cycle node it leaves.
    let mut leaves = vec![usize::MAX; new_size];

    for &u in &outside {
        for &v in &outside {
            reduced[new_index[u]][new_index[v]] = weights[u][v];
        }

        let mut best_in = f64::NEG_INFINITY;
        for &c in &cycle {
            let w = weights[u][c] - weights[parents[c]][c];
            if enters[new_index[u]] == usize::MAX || w > best_in {
                best_in = w;
                enters[new_index[u]] = c;
            }
        }
        reduced[new_index[u]][contracted] = best_in;

        let mut best_out = f64::NEG_INFINITY;
        for &c in &cycle {
            let w = weights[c][u];
            if leaves[new_index[u]] == usize::MAX || w > best_out {
                best_out = w;
                leaves[new_index[u]] = c;
            }
        }
        reduced[contracted][new_index[u]] = best_out;
    }

    let reduced_parents = chu_liu_edmonds(&reduced);

    let mut result = parents.clone();
    for &v in outside.iter().filter(|&&v| v != 0) {
        let p = reduced_parents[new_index[v]];
        result[v] = if p == contracted {
            leaves[new_index[v]]
        } else {
            outside[p]
        };
    }
    let entry_from = outside[reduced_parents[contracted]];
    let entry_node = enters[new_index[entry_from]];
    result[entry_node] = entry_from;
    result
}

/// Nodes of some cycle in a parent array, if any.
fn find_cycle(parents: &[usize]) -> Option<Vec<usize>> {
    let size = parents.len();
    // 0 = unvisited, 1 = on current path, 2 = done
    let mut state = vec![0u8; size];
    state[0] = 2;
    for start in 1..size {
        let mut path = Vec::new();
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            path.push(v);
            v = parents[v];
        }
        if state[v] == 1 {
            let pos = path.iter().position(|&p| p == v).unwrap();
            return Some(path[pos..].to_vec());
        }
        for p in path {
            state[p] = 2;
        }
    }
    None
}

fn weights_from(scores: &Array2<f64>) -> Vec<Vec<f64>> {
    let n = scores.ncols();
    let mut weights = vec![vec![f64::NEG_INFINITY; n + 1]; n + 1];
    for (j, row) in weights.iter_mut().enumerate() {
        for i in 1..=n {
            if i != j {
                row[i] = scores[[j, i - 1]];
            }
        }
    }
    weights
}

/// Highest-scoring single-root dependency tree.
///
/// `scores` is `(n + 1) x n`, entry `[[j, i - 1]]` scoring head `j` for
/// dependent `i`; normally per-dependent log-probabilities. Returns
/// `heads[i - 1]`. If the unconstrained optimum attaches several tokens
/// to the root, every token is tried as the only root dependent and the
/// best such tree is kept (the smaller token wins ties).
pub fn decode_mst(scores: &Array2<f64>) -> Vec<usize> {
    let n = scores.ncols();
    assert_eq!(scores.nrows(), n + 1, "scores must be (n + 1) x n");
    if n == 0 {
        return Vec::new();
    }

    let weights = weights_from(scores);
    let parents = chu_liu_edmonds(&weights);
    if parents[1..].iter().filter(|&&p| p == 0).count() == 1 {
        return parents[1..].to_vec();
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    for root_child in 1..=n {
        let mut constrained = weights.clone();
        for (i, w) in constrained[0].iter_mut().enumerate() {
            if i != root_child {
                *w = f64::NEG_INFINITY;
            }
        }
        let heads = chu_liu_edmonds(&constrained)[1..].to_vec();
        let total = tree_score(scores, &heads);
        if best.as_ref().is_none_or(|(b, _)| total > *b) {
            best = Some((total, heads));
        }
    }
    best.unwrap().1
}

/// Best label for every dependent given its head. `labels` is
/// `(n + 1) x n x L`. Ties go to the smaller label index.
pub fn assign_labels(labels: &Array3<f64>, heads: &[usize]) -> Vec<usize> {
    heads
        .iter()
        .enumerate()
        .map(|(k, &h)| {
            let mut best = 0;
            for l in 1..labels.dim().2 {
                if labels[[h, k, l]] > labels[[h, k, best]] {
                    best = l;
                }
            }
            best
        })
        .collect()
}
