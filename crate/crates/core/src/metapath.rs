//! Meta-path composition and the large/small path discriminator.

use serde::{Deserialize, Serialize};

use crate::error::{LspiError, Result};
use crate::graph::{HetGraph, MetaPath};
use crate::sparse::CsrMatrix;

/// Composed adjacency of one meta-path over the target type.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaPathGraph {
    pub path: MetaPath,
    /// Number of path instances between each pair of target nodes.
    pub count_adj: CsrMatrix<u64>,
    /// 0/1 connectivity; self-connections produced by composition are kept.
    pub bool_adj: CsrMatrix<u8>,
    /// Number of ones in `bool_adj`.
    pub degree_sum: u64,
}

impl MetaPathGraph {
    pub fn average_degree(&self) -> f64 {
        let n = self.bool_adj.rows();
        if n == 0 {
            0.0
        } else {
            self.degree_sum as f64 / n as f64
        }
    }

    /// Distinct-neighbor count of every target node.
    pub fn row_degrees(&self) -> Vec<usize> {
        (0..self.bool_adj.rows())
            .map(|r| self.bool_adj.row_nnz(r))
            .collect()
    }
}

pub fn compose_metapath(g: &HetGraph, p: &MetaPath) -> Result<MetaPathGraph> {
    p.check(g)?;
    let mut iter = p.relations.iter();
    let first = iter.next().expect("checked non-empty");
    let mut acc = g.relation(*first)?.adj.clone();
    for (i, &rid) in iter.enumerate() {
        acc = acc
            .matmul(&g.relation(rid)?.adj)
            .map_err(|e| LspiError::Composition {
                path: p.name.clone(),
                step: i + 1,
                reason: e.to_string(),
            })?;
    }
    let bool_adj = acc.pattern();
    let degree_sum = bool_adj.nnz() as u64;
    Ok(MetaPathGraph {
        path: p.clone(),
        count_adj: acc,
        bool_adj,
        degree_sum,
    })
}

/// Composes every path on its own thread; output order follows `paths`.
pub fn compose_all(g: &HetGraph, paths: &[MetaPath]) -> Result<Vec<MetaPathGraph>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = paths
            .iter()
            .map(|p| s.spawn(move || compose_metapath(g, p)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("composition thread panicked"))
            .collect()
    })
}

pub fn degree_sums(graphs: &[MetaPathGraph]) -> Result<Vec<(String, u64)>> {
    if graphs.is_empty() {
        return Err(LspiError::EmptyInput("degree_sums needs at least one meta-path"));
    }
    Ok(graphs
        .iter()
        .map(|m| (m.path.name.clone(), m.bool_adj.nnz() as u64))
        .collect())
}

/// The large/small split of a set of meta-paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPartition {
    pub tau: f64,
    /// Relative difference to the minimum-degree path, in percent.
    pub r_values: Vec<(String, f64)>,
    pub large_paths: Vec<String>,
    pub small_paths: Vec<String>,
}

impl PathPartition {
    pub fn is_large(&self, name: &str) -> bool {
        self.large_paths.iter().any(|p| p == name)
    }

    pub fn r_value(&self, name: &str) -> Option<f64> {
        self.r_values
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, r)| r)
    }

    /// Every path routed through one branch, bypassing the discriminator.
    pub fn forced(names: &[String], large: bool) -> Self {
        Self {
            tau: if large { 0.0 } else { f64::INFINITY },
            r_values: names.iter().map(|n| (n.clone(), 0.0)).collect(),
            large_paths: if large { names.to_vec() } else { Vec::new() },
            small_paths: if large { Vec::new() } else { names.to_vec() },
        }
    }
}

/// Splits paths given any per-path degree value (sums or averages; the ratio
/// is the same). Paths with `R >= tau` are large.
pub fn discriminate_degrees(degrees: &[(String, f64)], tau: f64) -> Result<PathPartition> {
    if degrees.is_empty() {
        return Err(LspiError::EmptyInput("discriminate needs at least one meta-path"));
    }
    if tau.is_nan() || tau < 0.0 {
        return Err(LspiError::InvalidParameter(format!("tau must be >= 0, got {tau}")));
    }
    let min = degrees
        .iter()
        .map(|&(_, d)| d)
        .fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        return Err(LspiError::ZeroMinimumDegree);
    }
    let r_values: Vec<(String, f64)> = degrees
        .iter()
        .map(|(n, d)| (n.clone(), (d - min) / min * 100.0))
        .collect();
    let (large, small): (Vec<_>, Vec<_>) = r_values.iter().partition(|(_, r)| *r >= tau);
    Ok(PathPartition {
        tau,
        large_paths: large.into_iter().map(|(n, _)| n.clone()).collect(),
        small_paths: small.into_iter().map(|(n, _)| n.clone()).collect(),
        r_values,
    })
}

pub fn discriminate(graphs: &[MetaPathGraph], tau: f64) -> Result<PathPartition> {
    let sums = degree_sums(graphs)?;
    let degrees: Vec<(String, f64)> = sums.into_iter().map(|(n, d)| (n, d as f64)).collect();
    discriminate_degrees(&degrees, tau)
}
