//! Neighbor filtering for large neighbor paths: random-walk transit
//! probability times cosine feature similarity, then a per-row top-T cut.

use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use crate::error::{LspiError, Result};
use crate::graph::{HetGraph, MetaPath, RelationId};
use crate::sparse::CsrMatrix;

/// Added to every cosine similarity so zero-similarity neighbors with a
/// positive transit probability still score above zero.
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TransitMatrix {
    pub path: MetaPath,
    pub probs: CsrMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceScores {
    pub path: MetaPath,
    pub scores: CsrMatrix<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilteredAdjacency {
    pub path: MetaPath,
    pub top_t: usize,
    pub adj: CsrMatrix<u8>,
}

/// Row-normalized relation adjacency. Rows without neighbors stay zero.
pub fn relation_transit(g: &HetGraph, r: RelationId) -> Result<CsrMatrix<f64>> {
    let adj = &g.relation(r)?.adj;
    let deg = adj.row_sums();
    Ok(adj.map(|row, _, v| v as f64 / deg[row] as f64))
}

pub fn metapath_transit(g: &HetGraph, p: &MetaPath) -> Result<TransitMatrix> {
    p.check(g)?;
    let mut probs: Option<CsrMatrix<f64>> = None;
    for (step, &rid) in p.relations.iter().enumerate() {
        let hop = relation_transit(g, rid)?;
        probs = Some(match probs {
            None => hop,
            Some(acc) => acc.matmul(&hop).map_err(|e| LspiError::Composition {
                path: p.name.clone(),
                step,
                reason: e.to_string(),
            })?,
        });
    }
    Ok(TransitMatrix {
        path: p.clone(),
        probs: probs.expect("checked non-empty"),
    })
}

/// Scales each row to unit L2 norm; all-zero rows are left as is.
pub fn normalize_features(h: &ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = h.to_owned();
    for mut row in out.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    out
}

/// Scores `prob * (cos + epsilon)` on the transit pattern only.
pub fn importance_scores(
    t: &TransitMatrix,
    h_norm: &ArrayView2<'_, f64>,
    epsilon: f64,
) -> Result<ImportanceScores> {
    if !(epsilon > 0.0) {
        return Err(LspiError::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if h_norm.nrows() != t.probs.rows() || t.probs.rows() != t.probs.cols() {
        return Err(LspiError::dims(
            "importance_scores feature rows",
            t.probs.shape(),
            h_norm.dim(),
        ));
    }
    let mut rows = Vec::with_capacity(t.probs.rows());
    for v in 0..t.probs.rows() {
        let (cols, probs) = t.probs.row(v);
        let hv = h_norm.row(v);
        rows.push(
            cols.iter()
                .zip(probs)
                .map(|(&u, &p)| (u, p * (hv.dot(&h_norm.row(u)) + epsilon)))
                .collect(),
        );
    }
    Ok(ImportanceScores {
        path: t.path.clone(),
        scores: CsrMatrix::from_rows(t.probs.cols(), rows),
        epsilon,
    })
}

/// Keeps the `top_t` best-scoring neighbors of every row. The diagonal entry,
/// when present, is always kept and counts toward the budget; ties go to the
/// lower column index.
pub fn select_top(scores: &ImportanceScores, top_t: usize) -> Result<FilteredAdjacency> {
    if top_t == 0 {
        return Err(LspiError::InvalidParameter("T must be at least 1".into()));
    }
    let m = &scores.scores;
    let mut rows = Vec::with_capacity(m.rows());
    let mut order: Vec<usize> = Vec::new();
    for v in 0..m.rows() {
        let (cols, vals) = m.row(v);
        let mut kept: Vec<usize> = if cols.len() <= top_t {
            cols.to_vec()
        } else {
            order.clear();
            order.extend(0..cols.len());
            order.sort_by(|&a, &b| {
                let self_a = cols[a] == v;
                let self_b = cols[b] == v;
                self_b
                    .cmp(&self_a)
                    .then(vals[b].total_cmp(&vals[a]))
                    .then(cols[a].cmp(&cols[b]))
            });
            order[..top_t].iter().map(|&k| cols[k]).collect()
        };
        kept.sort_unstable();
        rows.push(kept.into_iter().map(|c| (c, 1u8)).collect());
    }
    Ok(FilteredAdjacency {
        path: scores.path.clone(),
        top_t,
        adj: CsrMatrix::from_rows(m.cols(), rows),
    })
}

/// Summary of one filtered path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterSummary {
    pub path: String,
    pub top_t: usize,
    pub rows: usize,
    pub rows_truncated: usize,
    pub average_degree_before: f64,
    pub average_retained_degree: f64,
}

/// Transit, scoring and selection for one large path.
pub fn filter_path(
    g: &HetGraph,
    p: &MetaPath,
    top_t: usize,
    epsilon: f64,
) -> Result<(FilteredAdjacency, FilterSummary)> {
    let feats = g
        .target_features()
        .ok_or_else(|| LspiError::InvalidGraph("target type has no features".into()))?;
    let transit = metapath_transit(g, p)?;
    let h_norm = normalize_features(&feats.view());
    let scores = importance_scores(&transit, &h_norm.view(), epsilon)?;
    let filtered = select_top(&scores, top_t)?;
    let n = transit.probs.rows();
    let truncated = (0..n).filter(|&v| transit.probs.row_nnz(v) > top_t).count();
    let avg = |nnz: usize| if n == 0 { 0.0 } else { nnz as f64 / n as f64 };
    let summary = FilterSummary {
        path: p.name.clone(),
        top_t,
        rows: n,
        rows_truncated: truncated,
        average_degree_before: avg(transit.probs.nnz()),
        average_retained_degree: avg(filtered.adj.nnz()),
    };
    Ok((filtered, summary))
}
