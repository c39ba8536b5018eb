//! Downstream probes on learned embeddings: a linear SVM for node
//! classification and k-means for clustering.

pub mod kmeans;
pub mod metrics;
pub mod svm;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use kmeans::{kmeans, KMeansConfig, KMeansResult};
pub use metrics::{accuracy, ari, macro_f1, micro_f1, nmi};
pub use svm::{LinearSvm, SvmConfig};

use crate::error::{LspiError, Result};
use crate::graph::LabelSet;

pub const DEFAULT_TRAIN_RATIOS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];
pub const DEFAULT_REPEATS: usize = 10;

/// Mean scores of the SVM probe at one training ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScore {
    pub ratio: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    /// Repeats that had at least two classes in the training fold.
    pub repeats: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringScore {
    pub nmi: f64,
    pub ari: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub train_ratios: Vec<f64>,
    pub repeats: usize,
    pub svm: SvmConfig,
    pub kmeans: KMeansConfig,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            train_ratios: DEFAULT_TRAIN_RATIOS.to_vec(),
            repeats: DEFAULT_REPEATS,
            svm: SvmConfig::default(),
            kmeans: KMeansConfig::default(),
        }
    }
}

fn labeled_rows(z: &Array2<f64>, labels: &LabelSet, nodes: &[usize]) -> Result<(Array2<f64>, Vec<usize>)> {
    if z.nrows() != labels.len() {
        return Err(LspiError::dims("embedding rows", labels.len(), z.nrows()));
    }
    let y = nodes
        .iter()
        .map(|&v| labels.get(v).ok_or(LspiError::Unlabeled(v)))
        .collect::<Result<Vec<_>>>()?;
    Ok((z.select(Axis(0), nodes), y))
}

/// SVM classification on the embeddings of `nodes`: for each ratio, train on
/// that fraction of a seeded shuffle and score the rest, averaged over repeats.
/// Folds whose training part holds a single class are skipped with a warning.
pub fn eval_classification(
    z: &Array2<f64>,
    labels: &LabelSet,
    nodes: &[usize],
    cfg: &ProbeConfig,
    seed: u64,
) -> Result<Vec<ClassificationScore>> {
    let (x, y) = labeled_rows(z, labels, nodes)?;
    let k = labels.num_classes();
    let n = y.len();
    let mut out = Vec::with_capacity(cfg.train_ratios.len());
    for (ri, &ratio) in cfg.train_ratios.iter().enumerate() {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(LspiError::InvalidParameter(format!("train ratio {ratio} outside (0, 1)")));
        }
        let n_train = ((ratio * n as f64).round() as usize).clamp(1, n.saturating_sub(1));
        let (mut ma, mut mi, mut used) = (0.0, 0.0, 0);
        for rep in 0..cfg.repeats {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((ri as u64) << 32 | rep as u64));
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let (tr, te) = order.split_at(n_train);
            let y_tr: Vec<usize> = tr.iter().map(|&i| y[i]).collect();
            if y_tr.iter().all(|&c| c == y_tr[0]) {
                log::warn!("ratio {ratio}, repeat {rep}: training fold has one class, skipped");
                continue;
            }
            let svm = LinearSvm::fit(&x.select(Axis(0), tr).view(), &y_tr, k, &cfg.svm, &mut rng)?;
            let pred = svm.predict(&x.select(Axis(0), te).view());
            let y_te: Vec<usize> = te.iter().map(|&i| y[i]).collect();
            ma += macro_f1(&y_te, &pred, k);
            mi += micro_f1(&y_te, &pred, k);
            used += 1;
        }
        let div = used.max(1) as f64;
        out.push(ClassificationScore {
            ratio,
            macro_f1: ma / div,
            micro_f1: mi / div,
            repeats: used,
        });
    }
    Ok(out)
}

/// k-means with `k = num_classes` on the embeddings of `nodes`, scored by
/// NMI and ARI against the true classes.
pub fn eval_clustering(
    z: &Array2<f64>,
    labels: &LabelSet,
    nodes: &[usize],
    cfg: &KMeansConfig,
    seed: u64,
) -> Result<ClusteringScore> {
    let (x, y) = labeled_rows(z, labels, nodes)?;
    let result = kmeans(&x.view(), labels.num_classes(), cfg, &mut ChaCha8Rng::seed_from_u64(seed))?;
    Ok(ClusteringScore {
        nmi: nmi(&y, &result.assignments),
        ari: ari(&y, &result.assignments),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot(y: &[usize], k: usize) -> Array2<f64> {
        Array2::from_shape_fn((y.len(), k), |(i, c)| if y[i] == c { 1.0 } else { 0.0 })
    }

    #[test]
    fn one_hot_embeddings_are_perfect() {
        let y: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let labels = LabelSet::dense(&y, 3).unwrap();
        let z = one_hot(&y, 3);
        let nodes: Vec<usize> = (0..60).collect();
        let cfg = ProbeConfig {
            repeats: 2,
            svm: SvmConfig { epochs: 20, ..SvmConfig::default() },
            ..ProbeConfig::default()
        };
        for s in eval_classification(&z, &labels, &nodes, &cfg, 0).unwrap() {
            assert_eq!((s.macro_f1, s.micro_f1, s.repeats), (1.0, 1.0, 2));
        }
        let c = eval_clustering(&z, &labels, &nodes, &KMeansConfig::default(), 0).unwrap();
        assert_eq!((c.nmi, c.ari), (1.0, 1.0));
    }

    #[test]
    fn unlabeled_node_is_an_error() {
        let labels = LabelSet::new(vec![Some(0), None, Some(1)], 2).unwrap();
        let z = Array2::zeros((3, 2));
        assert!(matches!(
            eval_clustering(&z, &labels, &[0, 1], &KMeansConfig::default(), 0),
            Err(LspiError::Unlabeled(1))
        ));
    }
}
