//! Experiment runners: ablation, parameter sweeps, node-deletion robustness
//! and degree statistics of large paths.

use std::thread;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{LspiError, Result};
use crate::graph::{ensure_valid, HetGraph, MetaPath, NodeTypeId};
use crate::metapath::MetaPathGraph;
use crate::sparse::CsrMatrix;
use crate::train::{make_split, train, train_with_split, MetricsReport, TrainConfig, Variant};

/// One report per variant, all on the same split.
pub fn run_ablation(g: &HetGraph, paths: &[MetaPath], cfg: &TrainConfig) -> Result<Vec<MetricsReport>> {
    let split = make_split(&g.labels, cfg.split, cfg.seed)?;
    Variant::ALL
        .iter()
        .map(|&v| train_with_split(g, paths, cfg, &split, v).map(|o| o.report))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau: f64,
    pub top_t: usize,
    pub large_paths: String,
    pub test_macro_f1: f64,
    pub test_micro_f1: f64,
    pub iterations: usize,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "tau,top_t,large_paths,test_macro_f1,test_micro_f1,iterations";

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{}",
            self.tau, self.top_t, self.large_paths, self.test_macro_f1, self.test_micro_f1, self.iterations
        )
    }
}

/// Every `(tau, T)` pair on one shared split. Runs go out on scoped threads;
/// rows come back in grid order (tau-major).
pub fn sweep(
    g: &HetGraph,
    paths: &[MetaPath],
    cfg: &TrainConfig,
    tau_grid: &[f64],
    t_grid: &[usize],
) -> Result<Vec<SweepRow>> {
    if tau_grid.is_empty() || t_grid.is_empty() {
        return Err(LspiError::EmptyInput("sweep grids must be nonempty"));
    }
    let split = make_split(&g.labels, cfg.split, cfg.seed)?;
    let grid: Vec<(f64, usize)> = tau_grid
        .iter()
        .flat_map(|&tau| t_grid.iter().map(move |&t| (tau, t)))
        .collect();
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(grid.len());
    let chunk = grid.len().div_ceil(workers);
    let results: Vec<Result<SweepRow>> = thread::scope(|s| {
        let handles: Vec<_> = grid
            .chunks(chunk)
            .map(|part| {
                let split = &split;
                s.spawn(move || {
                    part.iter()
                        .map(|&(tau, top_t)| {
                            let run_cfg = TrainConfig {
                                tau,
                                top_t,
                                ..cfg.clone()
                            };
                            let r = train_with_split(g, paths, &run_cfg, split, Variant::Full)?.report;
                            Ok(SweepRow {
                                tau,
                                top_t,
                                large_paths: r.partition.large_paths.join("+"),
                                test_macro_f1: r.test_macro_f1,
                                test_micro_f1: r.test_micro_f1,
                                iterations: r.iterations,
                            })
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    results.into_iter().collect()
}

/// Removes `floor(fraction * n)` uniformly drawn nodes from each of `types`
/// (the target type when empty), with their edges, labels and feature rows.
/// Survivors are renumbered densely in their original order.
pub fn perturb_graph(g: &HetGraph, fraction: f64, seed: u64, types: &[NodeTypeId]) -> Result<HetGraph> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(LspiError::InvalidParameter(format!("fraction must be in (0, 1), got {fraction}")));
    }
    let types: Vec<NodeTypeId> = if types.is_empty() { vec![g.target] } else { types.to_vec() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // kept[type] = surviving old ids in ascending order
    let mut kept: Vec<Vec<usize>> = g.node_types.iter().map(|t| (0..t.count).collect()).collect();
    for t in &types {
        let n = g.node_types.get(t.0).ok_or_else(|| LspiError::UnknownNodeType(format!("#{}", t.0)))?.count;
        let remove = (fraction * n as f64).floor() as usize;
        let mut gone = vec![false; n];
        for v in sample(&mut rng, n, remove) {
            gone[v] = true;
        }
        kept[t.0] = (0..n).filter(|&v| !gone[v]).collect();
    }
    let new_id: Vec<Vec<Option<usize>>> = g
        .node_types
        .iter()
        .zip(&kept)
        .map(|(t, k)| {
            let mut m = vec![None; t.count];
            for (new, &old) in k.iter().enumerate() {
                m[old] = Some(new);
            }
            m
        })
        .collect();

    let labels = g.labels.select(&kept[g.target.0]);
    let before = g.labels.class_counts();
    let after = labels.class_counts();
    if let Some(c) = (0..before.len()).find(|&c| before[c] > 0 && after[c] == 0) {
        return Err(LspiError::ClassEmptied(c));
    }
    let mut out = g.clone();
    for (i, t) in out.node_types.iter_mut().enumerate() {
        t.count = kept[i].len();
    }
    for (i, f) in out.features.iter_mut().enumerate() {
        if let Some(x) = f {
            *x = x.select(ndarray::Axis(0), &kept[i]);
        }
    }
    for r in &mut out.relations {
        let (src, dst) = (&new_id[r.src.0], &new_id[r.dst.0]);
        let triplets = r
            .adj
            .iter()
            .filter_map(|(s, d, w)| Some((src[s]?, dst[d]?, w)));
        r.adj = CsrMatrix::from_triplets(kept[r.src.0].len(), kept[r.dst.0].len(), triplets)?;
    }
    out.labels = labels;
    ensure_valid(&out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub fraction: f64,
    pub target_nodes: usize,
    pub test_macro_f1: f64,
    pub test_micro_f1: f64,
}

/// Deletes each fraction of target nodes and retrains on a fresh split.
pub fn robustness(g: &HetGraph, paths: &[MetaPath], cfg: &TrainConfig, fractions: &[f64]) -> Result<Vec<RobustnessRow>> {
    fractions
        .iter()
        .map(|&f| {
            let pg = perturb_graph(g, f, cfg.seed, &[])?;
            let ps = paths
                .iter()
                .map(|p| pg.parse_metapath(&p.name))
                .collect::<Result<Vec<_>>>()?;
            let r = train(&pg, &ps, cfg)?.report;
            Ok(RobustnessRow {
                fraction: f,
                target_nodes: pg.target_count(),
                test_macro_f1: r.test_macro_f1,
                test_micro_f1: r.test_micro_f1,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeStatistics {
    pub max: usize,
    pub min: usize,
    pub avg: f64,
    pub median: f64,
}

impl DegreeStatistics {
    /// The four candidate values of `T`, average and median rounded.
    pub fn candidates(&self) -> [usize; 4] {
        [self.max, self.min, self.avg.round() as usize, self.median.round() as usize]
    }
}

/// Statistics of the pooled boolean row degrees of the given large paths.
pub fn degree_statistics(large: &[&MetaPathGraph]) -> Result<DegreeStatistics> {
    let mut degrees: Vec<usize> = large.iter().flat_map(|m| m.row_degrees()).collect();
    if degrees.is_empty() {
        return Err(LspiError::EmptyInput("degree statistics need at least one large-path row"));
    }
    degrees.sort_unstable();
    let n = degrees.len();
    let median = if n % 2 == 1 {
        degrees[n / 2] as f64
    } else {
        (degrees[n / 2 - 1] + degrees[n / 2]) as f64 / 2.0
    };
    Ok(DegreeStatistics {
        max: degrees[n - 1],
        min: degrees[0],
        avg: degrees.iter().sum::<usize>() as f64 / n as f64,
        median,
    })
}
