//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Every operation appends a node holding its output value. Nodes that depend
//! on a parameter also record the operation, so [`Tape::backward`] can replay
//! them in reverse. Node ids are assigned in creation order, so the tape is
//! always topologically sorted.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use crate::tensor::Tensor;

/// Probabilities below this are clamped before taking a logarithm.
pub const LOG_CLAMP: f64 = 1e-12;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Relu,
    /// ELU with α = 1.
    Elu,
    LeakyRelu {
        slope: f64,
    },
    Sigmoid,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
            Activation::LeakyRelu { slope } => {
                if x > 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative given the input `x` and the output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    y + 1.0
                }
            }
            Activation::LeakyRelu { slope } => {
                if x > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
        }
    }

    pub(crate) fn validate(self) -> Result<()> {
        match self {
            Activation::LeakyRelu { slope } if slope.is_nan() || slope <= 0.0 => {
                Err(Error::Contract(format!("leaky_relu slope must be > 0, got {slope}")))
            }
            _ => Ok(()),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Row-wise softmax of a dense tensor, using max subtraction.
pub fn softmax_rows(t: &Tensor) -> Tensor {
    let mut out = t.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r));
    }
    out
}

fn softmax_in_place(row: &mut [f64]) {
    if row.is_empty() {
        return;
    }
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}

/// One `(row, class, weight)` term of a weighted negative log-likelihood.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NllTerm {
    pub row: usize,
    pub class: usize,
    pub weight: f64,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    SpMM { adj: Arc<SparseMatrix>, x: Var },
    SpMMValues { pattern: Arc<SparseMatrix>, values: Var, x: Var },
    Add(Var, Var),
    Mul(Var, Var),
    AddRowBias(Var, Var),
    Scale(Var, f64),
    Activation(Var, Activation),
    SoftmaxRows(Var),
    Dropout { x: Var, mask: Vec<f64> },
    VStack(Var, Var),
    SliceRows { x: Var, start: usize },
    EdgeScoreSum { pattern: Arc<SparseMatrix>, scores: Var },
    EdgeSoftmax { pattern: Arc<SparseMatrix>, logits: Var },
    Sum(Var),
    WeightedNll { probs: Var, terms: Vec<NllTerm> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    is_param: bool,
}

/// Gradients produced by [`Tape::backward`], keyed by the [`Var`] of each
/// parameter leaf.
#[derive(Debug, Default)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, var: Var) -> Option<Tensor> {
        self.grads.get_mut(var.0).and_then(Option::take)
    }
}

/// Recorded computation for one forward/backward step.
#[derive(Debug)]
pub struct Tape {
    nodes: Vec<Node>,
    check_finite: bool,
    stochastic: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    /// A tape that rejects non-finite results of any operation.
    pub fn new() -> Self {
        Self { nodes: Vec::new(), check_finite: true, stochastic: false }
    }

    /// A tape that skips the per-operation finiteness scan.
    pub fn unchecked() -> Self {
        Self { check_finite: false, ..Self::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Whether a random operation (dropout) has been recorded.
    pub fn is_stochastic(&self) -> bool {
        self.stochastic
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, requires_grad: true, is_param: true });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, requires_grad: false, is_param: false });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var], name: &str) -> Result<Var> {
        if self.check_finite && !value.is_finite() {
            return Err(Error::NonFinite(name.to_string()));
        }
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        let op = if requires_grad { op } else { Op::Leaf };
        self.nodes.push(Node { value, op, requires_grad, is_param: false });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        self.push(value, Op::MatMul(a, b), &[a, b], "matmul")
    }

    /// Constant sparse matrix times `x`.
    pub fn spmm(&mut self, adj: &Arc<SparseMatrix>, x: Var) -> Result<Var> {
        let value = adj.spmm(self.value(x))?;
        self.push(value, Op::SpMM { adj: Arc::clone(adj), x }, &[x], "spmm")
    }

    /// Sparse matrix whose stored values are the `nnz × 1` column `values`,
    /// times `x`. Gradients flow to both `values` and `x`.
    pub fn spmm_values(&mut self, pattern: &Arc<SparseMatrix>, values: Var, x: Var) -> Result<Var> {
        let vals = self.value(values);
        if vals.shape() != (pattern.nnz(), 1) {
            return Err(Error::dim("spmm_values", format!("values {:?} for {} entries", vals.shape(), pattern.nnz())));
        }
        let value = pattern.spmm_with_values(vals.data(), self.value(x))?;
        self.push(value, Op::SpMMValues { pattern: Arc::clone(pattern), values, x }, &[values, x], "spmm_values")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).add(self.value(b))?;
        self.push(value, Op::Add(a, b), &[a, b], "add")
    }

    /// Element-wise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y)?;
        self.push(value, Op::Mul(a, b), &[a, b], "mul")
    }

    /// Adds the `1 × cols` row `bias` to every row of `a`.
    pub fn add_row_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (x, b) = (self.value(a), self.value(bias));
        if b.shape() != (1, x.cols()) {
            return Err(Error::dim("add_row_bias", format!("{:?} + {:?}", x.shape(), b.shape())));
        }
        let mut value = x.clone();
        for r in 0..value.rows() {
            for (v, &bv) in value.row_mut(r).iter_mut().zip(b.data()) {
                *v += bv;
            }
        }
        self.push(value, Op::AddRowBias(a, bias), &[a, bias], "add_row_bias")
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Result<Var> {
        let value = self.value(a).scale(k);
        self.push(value, Op::Scale(a, k), &[a], "scale")
    }

    pub fn activation(&mut self, a: Var, kind: Activation) -> Result<Var> {
        kind.validate()?;
        let value = self.value(a).map(|x| kind.apply(x));
        self.push(value, Op::Activation(a, kind), &[a], "activation")
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        if self.value(a).cols() == 0 {
            return Err(Error::dim("softmax_rows", "tensor has no columns"));
        }
        let value = softmax_rows(self.value(a));
        self.push(value, Op::SoftmaxRows(a), &[a], "softmax_rows")
    }

    /// Inverted dropout: kept entries are scaled by `1 / (1 - p)`.
    pub fn dropout(&mut self, a: Var, p: f64, rng: &mut impl Rng) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Contract(format!("dropout probability must be in [0, 1), got {p}")));
        }
        if p == 0.0 {
            return Ok(a);
        }
        self.stochastic = true;
        let keep = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..self.value(a).len()).map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep }).collect();
        let x = self.value(a);
        let value = Tensor::new(x.rows(), x.cols(), x.data().iter().zip(&mask).map(|(v, m)| v * m).collect())?;
        self.push(value, Op::Dropout { x: a, mask }, &[a], "dropout")
    }

    pub fn vstack(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).vstack(self.value(b))?;
        self.push(value, Op::VStack(a, b), &[a, b], "vstack")
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let value = self.value(a).slice_rows(start, end)?;
        self.push(value, Op::SliceRows { x: a, start }, &[a], "slice_rows")
    }

    /// For each stored entry `(u, v)` of `pattern`, `scores[u] + scores[v]`,
    /// as an `nnz × 1` column. `scores` is a `n × 1` column.
    pub fn edge_score_sum(&mut self, pattern: &Arc<SparseMatrix>, scores: Var) -> Result<Var> {
        let s = self.value(scores);
        if s.cols() != 1 || s.rows() != pattern.rows() || pattern.rows() != pattern.cols() {
            return Err(Error::dim(
                "edge_score_sum",
                format!("scores {:?} for pattern {:?}", s.shape(), pattern.shape()),
            ));
        }
        let value = Tensor::column(pattern.iter().map(|(u, v, _)| s.get(u, 0) + s.get(v, 0)).collect());
        self.push(value, Op::EdgeScoreSum { pattern: Arc::clone(pattern), scores }, &[scores], "edge_score_sum")
    }

    /// Softmax of the `nnz × 1` column `logits` within each row of `pattern`.
    /// Rows without stored entries contribute nothing.
    pub fn edge_softmax(&mut self, pattern: &Arc<SparseMatrix>, logits: Var) -> Result<Var> {
        let l = self.value(logits);
        if l.shape() != (pattern.nnz(), 1) {
            return Err(Error::dim("edge_softmax", format!("logits {:?} for {} entries", l.shape(), pattern.nnz())));
        }
        let mut out = l.clone().into_data();
        for r in 0..pattern.rows() {
            let (s, e) = (pattern.indptr()[r], pattern.indptr()[r + 1]);
            softmax_in_place(&mut out[s..e]);
        }
        let value = Tensor::column(out);
        self.push(value, Op::EdgeSoftmax { pattern: Arc::clone(pattern), logits }, &[logits], "edge_softmax")
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let value = Tensor::scalar(self.value(a).sum());
        self.push(value, Op::Sum(a), &[a], "sum")
    }

    /// `-Σ weight · ln(max(probs[row, class], 1e-12))` as a `1 × 1` tensor.
    pub fn weighted_nll(&mut self, probs: Var, terms: Vec<NllTerm>) -> Result<Var> {
        let p = self.value(probs);
        let mut total = 0.0;
        for t in &terms {
            if t.row >= p.rows() || t.class >= p.cols() {
                return Err(Error::dim("weighted_nll", format!("({}, {}) outside {:?}", t.row, t.class, p.shape())));
            }
            total -= t.weight * p.get(t.row, t.class).max(LOG_CLAMP).ln();
        }
        self.push(Tensor::scalar(total), Op::WeightedNll { probs, terms }, &[probs], "weighted_nll")
    }

    /// Propagates gradients from the scalar `loss` to every parameter leaf,
    /// then clears the tape.
    ///
    /// Parameters that the loss does not depend on receive zero gradients.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::Contract(format!("loss must be 1x1, got {:?}", self.value(loss).shape())));
        }
        let nodes = std::mem::take(&mut self.nodes);
        self.stochastic = false;

        let mut grads: Vec<Option<Tensor>> = (0..nodes.len()).map(|_| None).collect();
        if nodes[loss.0].requires_grad {
            grads[loss.0] = Some(Tensor::scalar(1.0));
        }

        for id in (0..=loss.0).rev() {
            let node = &nodes[id];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            let val = |v: Var| &nodes[v.0].value;
            let mut acc = |v: Var, t: Tensor| -> Result<()> {
                if !nodes[v.0].requires_grad {
                    return Ok(());
                }
                match &mut grads[v.0] {
                    Some(existing) => existing.add_assign(&t),
                    slot => {
                        *slot = Some(t);
                        Ok(())
                    }
                }
            };
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::MatMul(a, b) => {
                    acc(*a, g.matmul_t(val(*b))?)?;
                    acc(*b, val(*a).t_matmul(&g)?)?;
                }
                Op::SpMM { adj, x } => {
                    acc(*x, adj.spmm_t_with_values(adj.values(), &g)?)?;
                }
                Op::SpMMValues { pattern, values, x } => {
                    let vals = val(*values);
                    acc(*x, pattern.spmm_t_with_values(vals.data(), &g)?)?;
                    let xv = val(*x);
                    let dv = pattern
                        .iter()
                        .map(|(r, c, _)| g.row(r).iter().zip(xv.row(c)).map(|(a, b)| a * b).sum())
                        .collect();
                    acc(*values, Tensor::column(dv))?;
                }
                Op::Add(a, b) => {
                    acc(*a, g.clone())?;
                    acc(*b, g)?;
                }
                Op::Mul(a, b) => {
                    acc(*a, g.zip_map(val(*b), |x, y| x * y)?)?;
                    acc(*b, g.zip_map(val(*a), |x, y| x * y)?)?;
                }
                Op::AddRowBias(a, bias) => {
                    let mut db = Tensor::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (d, &v) in db.data_mut().iter_mut().zip(g.row(r)) {
                            *d += v;
                        }
                    }
                    acc(*bias, db)?;
                    acc(*a, g)?;
                }
                Op::Scale(a, k) => acc(*a, g.scale(*k))?,
                Op::Activation(a, kind) => {
                    let x = val(*a);
                    let y = &node.value;
                    let data = g
                        .data()
                        .iter()
                        .zip(x.data().iter().zip(y.data()))
                        .map(|(&gv, (&xv, &yv))| gv * kind.derivative(xv, yv))
                        .collect();
                    acc(*a, Tensor::new(g.rows(), g.cols(), data)?)?;
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let mut dx = Tensor::zeros(g.rows(), g.cols());
                    for r in 0..g.rows() {
                        let (yr, gr) = (y.row(r), g.row(r));
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for ((d, &yv), &gv) in dx.row_mut(r).iter_mut().zip(yr).zip(gr) {
                            *d = yv * (gv - dot);
                        }
                    }
                    acc(*a, dx)?;
                }
                Op::Dropout { x, mask } => {
                    let data = g.data().iter().zip(mask).map(|(a, m)| a * m).collect();
                    acc(*x, Tensor::new(g.rows(), g.cols(), data)?)?;
                }
                Op::VStack(a, b) => {
                    let split = val(*a).rows();
                    acc(*a, g.slice_rows(0, split)?)?;
                    acc(*b, g.slice_rows(split, g.rows())?)?;
                }
                Op::SliceRows { x, start } => {
                    let xv = val(*x);
                    let mut dx = Tensor::zeros(xv.rows(), xv.cols());
                    for r in 0..g.rows() {
                        dx.row_mut(start + r).copy_from_slice(g.row(r));
                    }
                    acc(*x, dx)?;
                }
                Op::EdgeScoreSum { pattern, scores } => {
                    let mut ds = vec![0.0; val(*scores).rows()];
                    for (k, (u, v, _)) in pattern.iter().enumerate() {
                        let gk = g.data()[k];
                        ds[u] += gk;
                        ds[v] += gk;
                    }
                    acc(*scores, Tensor::column(ds))?;
                }
                Op::EdgeSoftmax { pattern, logits } => {
                    let y = node.value.data();
                    let gd = g.data();
                    let mut dl = vec![0.0; y.len()];
                    for r in 0..pattern.rows() {
                        let (s, e) = (pattern.indptr()[r], pattern.indptr()[r + 1]);
                        let dot: f64 = (s..e).map(|k| y[k] * gd[k]).sum();
                        for k in s..e {
                            dl[k] = y[k] * (gd[k] - dot);
                        }
                    }
                    acc(*logits, Tensor::column(dl))?;
                }
                Op::Sum(a) => {
                    let x = val(*a);
                    acc(*a, Tensor::full(x.rows(), x.cols(), g.data()[0]))?;
                }
                Op::WeightedNll { probs, terms } => {
                    let p = val(*probs);
                    let mut dp = Tensor::zeros(p.rows(), p.cols());
                    let upstream = g.data()[0];
                    for t in terms {
                        let pv = p.get(t.row, t.class);
                        if pv > LOG_CLAMP {
                            dp.set(t.row, t.class, dp.get(t.row, t.class) - upstream * t.weight / pv);
                        }
                    }
                    acc(*probs, dp)?;
                }
            }
        }

        let grads = nodes
            .iter()
            .zip(grads)
            .map(|(node, g)| {
                node.is_param.then(|| g.unwrap_or_else(|| Tensor::zeros(node.value.rows(), node.value.cols())))
            })
            .collect();
        Ok(Gradients { grads })
    }
}
