//! A small reverse-mode differentiation tape over dense `f64` matrices.
//!
//! Only the operations the LSPI stack needs are provided. Every value is a
//! 2-D array; scalars are `1 x 1`. Nodes are appended in evaluation order,
//! so the backward sweep simply walks the tape in reverse.

use std::rc::Rc;

use ndarray::{Array2, Axis, Zip};

use crate::error::{LspiError, Result};
use crate::sparse::CsrMatrix;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// A constant sparse operator together with its transpose for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    pub forward: CsrMatrix<f64>,
    pub transpose: CsrMatrix<f64>,
}

impl SparseOperator {
    pub fn new(forward: CsrMatrix<f64>) -> Self {
        let transpose = forward.transpose();
        Self { forward, transpose }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl std::str::FromStr for Activation {
    type Err = LspiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "none" | "linear" => Ok(Activation::Identity),
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(LspiError::InvalidParameter(format!("unknown activation `{other}`"))),
        }
    }
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    /// `a · bᵀ`
    MatMulNT(Var, Var),
    SpMM(Rc<SparseOperator>, Var),
    /// `a + b` with `b` a `1 x d` row broadcast over the rows of `a`.
    AddRow(Var, Var),
    Relu(Var),
    Tanh(Var),
    MulConst(Var, Rc<Array2<f64>>),
    Mean(Var),
    Concat(Vec<Var>),
    /// Row-wise softmax.
    Softmax(Var),
    /// `Σ_i β_i H_i` with `β` a `1 x P` row.
    WeightedSum(Vec<Var>, Var),
    /// Mean negative log-likelihood of `(row, class)` targets; keeps the
    /// row softmax of the selected rows for the backward pass.
    CrossEntropy(Var, Rc<Vec<(usize, usize)>>, Array2<f64>),
}

struct Node {
    value: Array2<f64>,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of one backward sweep, indexed by [`Var`].
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Array2<f64>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Array2<f64>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn check_same(ctx: &str, a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(LspiError::dims(ctx, a.dim(), b.dim()));
    }
    Ok(())
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[[0, 0]]
    }

    pub fn leaf(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Index of the first node holding a NaN or infinity, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| n.value.iter().any(|x| !x.is_finite()))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.ncols() != bv.nrows() {
            return Err(LspiError::dims("matmul", (av.ncols(), "_"), bv.dim()));
        }
        let out = av.dot(bv);
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.ncols() != bv.ncols() {
            return Err(LspiError::dims("matmul_nt", (av.ncols(), "_"), bv.dim()));
        }
        let out = av.dot(&bv.t());
        Ok(self.push(out, Op::MatMulNT(a, b)))
    }

    pub fn spmm(&mut self, s: Rc<SparseOperator>, a: Var) -> Result<Var> {
        let out = s.forward.spmm(&self.value(a).view())?;
        Ok(self.push(out, Op::SpMM(s, a)))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (av, rv) = (self.value(a), self.value(row));
        if rv.nrows() != 1 || rv.ncols() != av.ncols() {
            return Err(LspiError::dims("add_row", (1, av.ncols()), rv.dim()));
        }
        let out = av + rv;
        Ok(self.push(out, Op::AddRow(a, row)))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).mapv(|x| x.max(0.0));
        self.push(out, Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).mapv(f64::tanh);
        self.push(out, Op::Tanh(a))
    }

    pub fn activate(&mut self, a: Var, act: Activation) -> Var {
        match act {
            Activation::Identity => a,
            Activation::Relu => self.relu(a),
            Activation::Tanh => self.tanh(a),
        }
    }

    pub fn mul_const(&mut self, a: Var, c: Rc<Array2<f64>>) -> Result<Var> {
        check_same("mul_const", self.value(a), &c)?;
        let out = self.value(a) * &*c;
        Ok(self.push(out, Op::MulConst(a, c)))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let m = if v.is_empty() { 0.0 } else { v.sum() / v.len() as f64 };
        self.push(Array2::from_elem((1, 1), m), Op::Mean(a))
    }

    /// Concatenates `1 x 1` scalars into a `1 x P` row.
    pub fn concat_scalars(&mut self, xs: &[Var]) -> Result<Var> {
        let mut row = Array2::zeros((1, xs.len()));
        for (i, &x) in xs.iter().enumerate() {
            let v = self.value(x);
            if v.dim() != (1, 1) {
                return Err(LspiError::dims("concat_scalars", (1, 1), v.dim()));
            }
            row[[0, i]] = v[[0, 0]];
        }
        Ok(self.push(row, Op::Concat(xs.to_vec())))
    }

    pub fn softmax(&mut self, a: Var) -> Var {
        let out = softmax_rows(self.value(a));
        self.push(out, Op::Softmax(a))
    }

    pub fn weighted_sum(&mut self, hs: &[Var], beta: Var) -> Result<Var> {
        let b = self.value(beta);
        if b.dim() != (1, hs.len()) || hs.is_empty() {
            return Err(LspiError::dims("weighted_sum", (1, hs.len()), b.dim()));
        }
        let first = self.value(hs[0]);
        let mut out = Array2::zeros(first.dim());
        for (i, &h) in hs.iter().enumerate() {
            check_same("weighted_sum", first, self.value(h))?;
            out.scaled_add(b[[0, i]], self.value(h));
        }
        Ok(self.push(out, Op::WeightedSum(hs.to_vec(), beta)))
    }

    /// Mean cross-entropy of `logits` rows against class `targets`.
    pub fn cross_entropy(&mut self, logits: Var, targets: Vec<(usize, usize)>) -> Result<Var> {
        let lv = self.value(logits);
        if targets.is_empty() {
            return Err(LspiError::EmptyInput("cross_entropy needs at least one target"));
        }
        let mut probs = Array2::zeros((targets.len(), lv.ncols()));
        let mut loss = 0.0;
        for (k, &(row, class)) in targets.iter().enumerate() {
            if row >= lv.nrows() || class >= lv.ncols() {
                return Err(LspiError::dims("cross_entropy target", lv.dim(), (row, class)));
            }
            let r = lv.row(row);
            let max = r.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
            let lse = max + r.mapv(|x| (x - max).exp()).sum().ln();
            loss += lse - r[class];
            probs
                .row_mut(k)
                .assign(&r.mapv(|x| (x - lse).exp()));
        }
        loss /= targets.len() as f64;
        Ok(self.push(
            Array2::from_elem((1, 1), loss),
            Op::CrossEntropy(logits, Rc::new(targets), probs),
        ))
    }

    /// Back-propagates from the scalar `root`.
    pub fn backward(&self, root: Var) -> Gradients {
        let mut grads: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Array2::ones(self.nodes[root.0].value.dim()));

        fn accumulate(grads: &mut [Option<Array2<f64>>], v: Var, g: Array2<f64>) {
            match &mut grads[v.0] {
                Some(acc) => *acc += &g,
                slot @ None => *slot = Some(g),
            }
        }

        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {
                    grads[idx] = Some(g);
                }
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.value(*b).t());
                    let gb = self.value(*a).t().dot(&g);
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::MatMulNT(a, b) => {
                    let ga = g.dot(self.value(*b));
                    let gb = g.t().dot(self.value(*a));
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::SpMM(s, a) => {
                    let ga = s.transpose.spmm(&g.view()).expect("shape checked in forward");
                    accumulate(&mut grads, *a, ga);
                }
                Op::AddRow(a, row) => {
                    let gr = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    accumulate(&mut grads, *row, gr);
                    accumulate(&mut grads, *a, g);
                }
                Op::Relu(a) => {
                    let mut ga = g;
                    Zip::from(&mut ga)
                        .and(&node.value)
                        .for_each(|gi, &y| if y <= 0.0 { *gi = 0.0 });
                    accumulate(&mut grads, *a, ga);
                }
                Op::Tanh(a) => {
                    let mut ga = g;
                    Zip::from(&mut ga)
                        .and(&node.value)
                        .for_each(|gi, &y| *gi *= 1.0 - y * y);
                    accumulate(&mut grads, *a, ga);
                }
                Op::MulConst(a, c) => {
                    accumulate(&mut grads, *a, g * &**c);
                }
                Op::Mean(a) => {
                    let shape = self.value(*a).dim();
                    let n = (shape.0 * shape.1).max(1) as f64;
                    accumulate(&mut grads, *a, Array2::from_elem(shape, g[[0, 0]] / n));
                }
                Op::Concat(xs) => {
                    for (i, &x) in xs.iter().enumerate() {
                        accumulate(&mut grads, x, Array2::from_elem((1, 1), g[[0, i]]));
                    }
                }
                Op::Softmax(a) => {
                    let y = &node.value;
                    let mut ga = Array2::zeros(y.dim());
                    for ((gy, yr), mut out) in g.rows().into_iter().zip(y.rows()).zip(ga.rows_mut()) {
                        let dot = gy.dot(&yr);
                        Zip::from(&mut out)
                            .and(&gy)
                            .and(&yr)
                            .for_each(|o, &gi, &yi| *o = yi * (gi - dot));
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::WeightedSum(hs, beta) => {
                    let b = self.value(*beta);
                    let mut gb = Array2::zeros((1, hs.len()));
                    for (i, &h) in hs.iter().enumerate() {
                        gb[[0, i]] = (&g * self.value(h)).sum();
                        accumulate(&mut grads, h, &g * b[[0, i]]);
                    }
                    accumulate(&mut grads, *beta, gb);
                }
                Op::CrossEntropy(logits, targets, probs) => {
                    let scale = g[[0, 0]] / targets.len() as f64;
                    let mut gl = Array2::zeros(self.value(*logits).dim());
                    for (k, &(row, class)) in targets.iter().enumerate() {
                        let mut r = gl.row_mut(row);
                        r.scaled_add(scale, &probs.row(k));
                        r[class] -= scale;
                    }
                    accumulate(&mut grads, *logits, gl);
                }
            }
        }
        Gradients { grads }
    }
}

pub fn softmax_rows(a: &Array2<f64>) -> Array2<f64> {
    let mut out = a.clone();
    for mut r in out.rows_mut() {
        let max = r.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        r.mapv_inplace(|x| (x - max).exp());
        let s = r.sum();
        r /= s;
    }
    out
}
