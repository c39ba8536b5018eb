//! LSPI building blocks on top of the tape.

use std::collections::BTreeMap;
use std::rc::Rc;

use ndarray::Array2;

use super::tape::{Activation, SparseOperator, Tape, Var};
use crate::error::{LspiError, Result};
use crate::graph::{HetGraph, LabelSet};
use crate::sparse::CsrMatrix;

/// `D^{-1/2} (A + I) D^{-1/2}` for one meta-path view.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    pub path: String,
    pub operator: Rc<SparseOperator>,
}

impl NormalizedAdjacency {
    pub fn matrix(&self) -> &CsrMatrix<f64> {
        &self.operator.forward
    }
}

/// Adds self-loops to a square 0/1 pattern and scales entry `(i, j)` by
/// `1 / sqrt(deg_i * deg_j)`, degrees taken as row sums of `A + I`.
pub fn sym_normalize(path: &str, adj: &CsrMatrix<u8>) -> Result<NormalizedAdjacency> {
    let (n, m) = adj.shape();
    if n != m {
        return Err(LspiError::dims("sym_normalize", (n, n), (n, m)));
    }
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(n);
    for r in 0..n {
        let cols = adj.row(r).0;
        let mut row = cols.to_vec();
        if let Err(pos) = cols.binary_search(&r) {
            row.insert(pos, r);
        }
        rows.push(row);
    }
    let deg: Vec<f64> = rows.iter().map(|r| r.len() as f64).collect();
    let weighted = rows
        .into_iter()
        .enumerate()
        .map(|(i, cols)| cols.into_iter().map(|j| (j, 1.0 / (deg[i] * deg[j]).sqrt())).collect())
        .collect();
    Ok(NormalizedAdjacency {
        path: path.to_string(),
        operator: Rc::new(SparseOperator::new(CsrMatrix::from_rows(n, weighted))),
    })
}

/// Projects every node type that has both features and a projection matrix:
/// `x' = W_A x` for each row `x`.
pub fn project_features(
    proj: &BTreeMap<String, Array2<f64>>,
    g: &HetGraph,
) -> Result<BTreeMap<String, Array2<f64>>> {
    let target = &g.node_types[g.target.0].name;
    if !proj.contains_key(target) {
        return Err(LspiError::MissingProjection(target.clone()));
    }
    let mut out = BTreeMap::new();
    for (t, feats) in g.node_types.iter().zip(&g.features) {
        let Some(x) = feats else { continue };
        let Some(w) = proj.get(&t.name) else { continue };
        if w.ncols() != x.ncols() {
            return Err(LspiError::dims(
                format!("projection of `{}`", t.name),
                (w.nrows(), x.ncols()),
                w.dim(),
            ));
        }
        out.insert(t.name.clone(), x.dot(&w.t()));
    }
    Ok(out)
}

/// One convolution layer `act(norm · h · w)`.
pub fn graph_conv(
    tape: &mut Tape,
    norm: &NormalizedAdjacency,
    h: Var,
    w: Var,
    activation: Activation,
) -> Result<Var> {
    let n = norm.matrix().rows();
    if tape.value(h).nrows() != n {
        return Err(LspiError::dims("graph_conv input rows", n, tape.value(h).nrows()));
    }
    let hw = tape.matmul(h, w)?;
    let out = tape.spmm(norm.operator.clone(), hw)?;
    Ok(tape.activate(out, activation))
}

/// Attention parameters as tape variables.
#[derive(Debug, Clone, Copy)]
pub struct AttentionVars {
    /// `d' x d'`
    pub weight: Var,
    /// `1 x d'`
    pub bias: Var,
    /// `d' x 1`
    pub query: Var,
}

/// Fuses per-path embeddings. Returns `(Z, scores, beta)` where `scores` are
/// the pre-softmax path scores and `beta` their softmax, both `1 x P`.
pub fn subgraph_attention(
    tape: &mut Tape,
    embeddings: &[Var],
    attn: AttentionVars,
) -> Result<(Var, Var, Var)> {
    if embeddings.is_empty() {
        return Err(LspiError::EmptyInput("subgraph attention needs at least one embedding"));
    }
    let shape = tape.value(embeddings[0]).dim();
    let mut scores = Vec::with_capacity(embeddings.len());
    for &h in embeddings {
        if tape.value(h).dim() != shape {
            return Err(LspiError::dims("subgraph attention", shape, tape.value(h).dim()));
        }
        let proj = tape.matmul_nt(h, attn.weight)?;
        let shifted = tape.add_row(proj, attn.bias)?;
        let act = tape.tanh(shifted);
        let per_node = tape.matmul(act, attn.query)?;
        scores.push(tape.mean(per_node));
    }
    let w = tape.concat_scalars(&scores)?;
    let beta = tape.softmax(w);
    let z = tape.weighted_sum(embeddings, beta)?;
    Ok((z, w, beta))
}

/// Mean cross-entropy over `idx`, each of which must be labeled.
pub fn cross_entropy(tape: &mut Tape, logits: Var, labels: &LabelSet, idx: &[usize]) -> Result<Var> {
    let targets = idx
        .iter()
        .map(|&v| labels.get(v).map(|c| (v, c)).ok_or(LspiError::Unlabeled(v)))
        .collect::<Result<Vec<_>>>()?;
    tape.cross_entropy(logits, targets)
}
