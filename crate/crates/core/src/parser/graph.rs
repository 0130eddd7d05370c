//! A small tape of matrix operations with reverse-mode gradients.
//!
//! Every value is a 2-d `f64` matrix. Row vectors are `1 x c`, scalars
//! `1 x 1`. Nodes are appended in evaluation order, so a backward sweep
//! over the tape in reverse visits every node after all its consumers.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis, Zip};

use super::params::{ParamId, ParamStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Input,
    Param,
    MatMul(Var, Var),
    /// `a · bᵀ`
    MatMulT(Var, Var),
    /// Elementwise sum; `b` may broadcast as a row, a column or a scalar.
    Add(Var, Var),
    Mul(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    LeakyRelu(Var, f64),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize, usize),
    SliceRows(Var, usize, usize),
    /// Rows of `a` picked by index; indices may repeat.
    Gather(Var, Vec<usize>),
    /// `out[r][l] = Σ_k a[r][l * d + k] * b[r][k]` with `d = b.ncols()`.
    BlockRowDot(Var, Var),
    /// Summed row-wise softmax cross-entropy. `probs` caches the softmax
    /// (zero in masked cells).
    CrossEntropy {
        logits: Var,
        targets: Vec<usize>,
        probs: Array2<f64>,
    },
}

struct Node {
    value: Array2<f64>,
    op: Op,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    param_vars: Vec<(ParamId, Var)>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Sum `grad` down to `shape` along broadcast axes.
fn unbroadcast(grad: &Array2<f64>, shape: (usize, usize)) -> Array2<f64> {
    let mut g = grad.clone();
    if shape.0 == 1 && g.nrows() != 1 {
        g = g.sum_axis(Axis(0)).insert_axis(Axis(0));
    }
    if shape.1 == 1 && g.ncols() != 1 {
        g = g.sum_axis(Axis(1)).insert_axis(Axis(1));
    }
    g
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, var: Var) -> &Array2<f64> {
        &self.nodes[var.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A constant.
    pub fn input(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Input)
    }

    /// A parameter; repeated calls return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&(_, var)) = self.param_vars.iter().find(|(p, _)| *p == id) {
            return var;
        }
        let var = self.push(store.value(id).clone(), Op::Param);
        self.param_vars.push((id, var));
        var
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).dot(self.value(b));
        self.push(value, Op::MatMul(a, b))
    }

    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).dot(&self.value(b).t());
        self.push(value, Op::MatMulT(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        let broadcast_ok = (vb.nrows() == va.nrows() || vb.nrows() == 1)
            && (vb.ncols() == va.ncols() || vb.ncols() == 1);
        assert!(
            broadcast_ok,
            "cannot add {:?} to {:?}",
            vb.shape(),
            va.shape()
        );
        let value = va + vb;
        self.push(value, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) * self.value(b);
        self.push(value, Op::Mul(a, b))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(sigmoid);
        self.push(value, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(f64::tanh);
        self.push(value, Op::Tanh(a))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let value = self.value(a).mapv(|x| if x > 0.0 { x } else { slope * x });
        self.push(value, Op::LeakyRelu(a, slope))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<ArrayView2<f64>> = parts.iter().map(|&p| self.value(p).view()).collect();
        let value = concatenate(Axis(1), &views).expect("row counts differ");
        self.push(value, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let views: Vec<ArrayView2<f64>> = parts.iter().map(|&p| self.value(p).view()).collect();
        let value = concatenate(Axis(0), &views).expect("column counts differ");
        self.push(value, Op::ConcatRows(parts.to_vec()))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let value = self.value(a).slice(s![.., start..end]).to_owned();
        self.push(value, Op::SliceCols(a, start, end))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Var {
        let value = self.value(a).slice(s![start..end, ..]).to_owned();
        self.push(value, Op::SliceRows(a, start, end))
    }

    pub fn gather(&mut self, a: Var, rows: &[usize]) -> Var {
        let value = self.value(a).select(Axis(0), rows);
        self.push(value, Op::Gather(a, rows.to_vec()))
    }

    pub fn block_row_dot(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        let d = vb.ncols();
        assert_eq!(va.nrows(), vb.nrows());
        assert_eq!(va.ncols() % d, 0);
        let blocks = va.ncols() / d;
        let mut value = Array2::zeros((va.nrows(), blocks));
        for r in 0..va.nrows() {
            for l in 0..blocks {
                value[[r, l]] = va.slice(s![r, l * d..(l + 1) * d]).dot(&vb.row(r));
            }
        }
        self.push(value, Op::BlockRowDot(a, b))
    }

    /// `Σ_r −log softmax(logits[r])[targets[r]]`, where column
    /// `masked[r]` (if any) is excluded from row `r`'s softmax.
    pub fn cross_entropy(
        &mut self,
        logits: Var,
        targets: &[usize],
        masked: &[Option<usize>],
    ) -> Var {
        let x = self.value(logits);
        assert_eq!(x.nrows(), targets.len());
        assert_eq!(x.nrows(), masked.len());

        let mut probs = Array2::zeros(x.raw_dim());
        let mut loss = 0.0;
        for (r, row) in x.outer_iter().enumerate() {
            let allowed = |c: usize| masked[r] != Some(c);
            assert!(allowed(targets[r]), "target is masked");
            let max = row
                .iter()
                .enumerate()
                .filter(|&(c, _)| allowed(c))
                .map(|(_, &v)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for (c, &v) in row.iter().enumerate() {
                if allowed(c) {
                    let e = (v - max).exp();
                    probs[[r, c]] = e;
                    total += e;
                }
            }
            probs.row_mut(r).mapv_inplace(|p| p / total);
            loss -= row[targets[r]] - max - total.ln();
        }

        self.push(
            Array2::from_elem((1, 1), loss),
            Op::CrossEntropy {
                logits,
                targets: targets.to_vec(),
                probs,
            },
        )
    }

    /// Back-propagate from scalar `output` and return the gradient of
    /// every parameter node.
    pub fn backward(&self, output: Var) -> Vec<(ParamId, Array2<f64>)> {
        assert_eq!(self.value(output).dim(), (1, 1), "output must be a scalar");

        let mut grads: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output.0] = Some(Array2::ones((1, 1)));

        fn accumulate(grads: &mut [Option<Array2<f64>>], var: Var, g: Array2<f64>) {
            match &mut grads[var.0] {
                Some(existing) => *existing += &g,
                slot @ None => *slot = Some(g),
            }
        }

        for idx in (0..=output.0).rev() {
            let Some(grad) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => {}
                Op::Param => {
                    grads[idx] = Some(grad);
                }
                Op::MatMul(a, b) => {
                    let ga = grad.dot(&self.value(*b).t());
                    let gb = self.value(*a).t().dot(&grad);
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::MatMulT(a, b) => {
                    let ga = grad.dot(self.value(*b));
                    let gb = grad.t().dot(self.value(*a));
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Add(a, b) => {
                    let gb = unbroadcast(&grad, self.value(*b).dim());
                    accumulate(&mut grads, *b, gb);
                    accumulate(&mut grads, *a, grad);
                }
                Op::Mul(a, b) => {
                    let ga = &grad * self.value(*b);
                    let gb = &grad * self.value(*a);
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Sigmoid(a) => {
                    let mut g = grad;
                    Zip::from(&mut g)
                        .and(&node.value)
                        .for_each(|g, &y| *g *= y * (1.0 - y));
                    accumulate(&mut grads, *a, g);
                }
                Op::Tanh(a) => {
                    let mut g = grad;
                    Zip::from(&mut g)
                        .and(&node.value)
                        .for_each(|g, &y| *g *= 1.0 - y * y);
                    accumulate(&mut grads, *a, g);
                }
                Op::LeakyRelu(a, slope) => {
                    let mut g = grad;
                    Zip::from(&mut g).and(self.value(*a)).for_each(|g, &x| {
                        if x <= 0.0 {
                            *g *= slope
                        }
                    });
                    accumulate(&mut grads, *a, g);
                }
                Op::ConcatCols(parts) => {
                    let mut start = 0;
                    for &p in parts {
                        let width = self.value(p).ncols();
                        let g = grad.slice(s![.., start..start + width]).to_owned();
                        accumulate(&mut grads, p, g);
                        start += width;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut start = 0;
                    for &p in parts {
                        let height = self.value(p).nrows();
                        let g = grad.slice(s![start..start + height, ..]).to_owned();
                        accumulate(&mut grads, p, g);
                        start += height;
                    }
                }
                Op::SliceCols(a, start, end) => {
                    let mut g = Array2::zeros(self.value(*a).raw_dim());
                    g.slice_mut(s![.., *start..*end]).assign(&grad);
                    accumulate(&mut grads, *a, g);
                }
                Op::SliceRows(a, start, end) => {
                    let mut g = Array2::zeros(self.value(*a).raw_dim());
                    g.slice_mut(s![*start..*end, ..]).assign(&grad);
                    accumulate(&mut grads, *a, g);
                }
                Op::Gather(a, rows) => {
                    let mut g = Array2::zeros(self.value(*a).raw_dim());
                    for (k, &r) in rows.iter().enumerate() {
                        let mut target = g.row_mut(r);
                        target += &grad.row(k);
                    }
                    accumulate(&mut grads, *a, g);
                }
                Op::BlockRowDot(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    let d = vb.ncols();
                    let mut ga = Array2::zeros(va.raw_dim());
                    let mut gb = Array2::zeros(vb.raw_dim());
                    for r in 0..va.nrows() {
                        for l in 0..grad.ncols() {
                            let g = grad[[r, l]];
                            let block = va.slice(s![r, l * d..(l + 1) * d]);
                            ga.slice_mut(s![r, l * d..(l + 1) * d])
                                .scaled_add(g, &vb.row(r));
                            gb.row_mut(r).scaled_add(g, &block);
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::CrossEntropy {
                    logits,
                    targets,
                    probs,
                } => {
                    let scale = grad[[0, 0]];
                    let mut g = probs.clone();
                    for (r, &t) in targets.iter().enumerate() {
                        g[[r, t]] -= 1.0;
                    }
                    g.mapv_inplace(|v| v * scale);
                    accumulate(&mut grads, *logits, g);
                }
            }
        }

        self.param_vars
            .iter()
            .filter_map(|&(id, var)| grads[var.0].take().map(|g| (id, g)))
            .collect()
    }
}
