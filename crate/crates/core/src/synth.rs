//! Planted-partition heterogeneous graphs.
//!
//! Target nodes get a class and Gaussian features around a class centroid.
//! Each bridging type has its nodes assigned to classes round-robin and is
//! wired to targets with probability `p_in` inside a class and `p_out`
//! across. A relation can then receive uniform noise edges.

use std::collections::HashSet;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LspiError, Result};
use crate::graph::{ensure_valid, HetGraph, LabelSet, NodeType, NodeTypeId, Relation};
use crate::io::{Bundle, Defaults};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeSpec {
    pub name: String,
    pub code: char,
    pub count: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Extra uniform edges as a fraction of the clean edge count.
    #[serde(default)]
    pub noise_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub target_name: String,
    pub target_code: char,
    pub target_count: usize,
    pub classes: usize,
    pub feature_dim: usize,
    /// Standard deviation of features around their class centroid.
    pub feature_noise: f64,
    pub bridges: Vec<BridgeSpec>,
    pub meta_paths: Vec<String>,
    pub tau: f64,
    pub top_t: usize,
    pub seed: u64,
}

impl SynthSpec {
    /// Three types (paper, author, subject), two classes, sixty papers.
    /// `PSP` is much denser than `PAP` and comes out as the large path.
    pub fn small_acm(seed: u64) -> Self {
        Self {
            target_name: "paper".into(),
            target_code: 'P',
            target_count: 60,
            classes: 2,
            feature_dim: 8,
            feature_noise: 1.0,
            bridges: vec![
                BridgeSpec {
                    name: "author".into(),
                    code: 'A',
                    count: 40,
                    p_in: 0.08,
                    p_out: 0.005,
                    noise_rate: 0.0,
                },
                BridgeSpec {
                    name: "subject".into(),
                    code: 'S',
                    count: 6,
                    p_in: 0.5,
                    p_out: 0.05,
                    noise_rate: 0.0,
                },
            ],
            meta_paths: vec!["PAP".into(), "PSP".into()],
            tau: 30.0,
            top_t: 10,
            seed,
        }
    }

    /// Twelve papers, two classes, both paths nonempty.
    pub fn tiny(seed: u64) -> Self {
        let mut spec = Self::small_acm(seed);
        spec.target_count = 12;
        spec.feature_dim = 5;
        spec.bridges[0].count = 6;
        spec.bridges[0].p_in = 0.4;
        spec.bridges[1].count = 2;
        spec
    }

    /// Three classes and noisy features, so structure matters. The subject
    /// relation is the dense one; noise on it produces cross-class `PSP`
    /// neighbors that filtering should drop.
    pub fn noise_benchmark(seed: u64) -> Self {
        Self {
            target_name: "paper".into(),
            target_code: 'P',
            target_count: 150,
            classes: 3,
            feature_dim: 16,
            feature_noise: 2.0,
            bridges: vec![
                BridgeSpec {
                    name: "author".into(),
                    code: 'A',
                    count: 90,
                    p_in: 0.04,
                    p_out: 0.01,
                    noise_rate: 0.0,
                },
                BridgeSpec {
                    name: "subject".into(),
                    code: 'S',
                    count: 12,
                    p_in: 0.3,
                    p_out: 0.02,
                    noise_rate: 0.3,
                },
            ],
            meta_paths: vec!["PAP".into(), "PSP".into()],
            tau: 30.0,
            top_t: 15,
            seed,
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(LspiError::InvalidParameter(m));
        if self.classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.classes));
        }
        if self.target_count < self.classes {
            return bad(format!("{} targets cannot hold {} classes", self.target_count, self.classes));
        }
        if self.feature_dim == 0 || !(self.feature_noise >= 0.0) {
            return bad("feature_dim must be positive and feature_noise non-negative".into());
        }
        for b in &self.bridges {
            if b.count < self.classes {
                return bad(format!("bridge `{}` has fewer nodes than classes", b.name));
            }
            for (what, p) in [("p_in", b.p_in), ("p_out", b.p_out)] {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("bridge `{}`: {what} = {p} outside [0, 1]", b.name));
                }
            }
            if !(b.noise_rate >= 0.0) {
                return bad(format!("bridge `{}`: negative noise rate", b.name));
            }
            if b.code == self.target_code {
                return bad(format!("bridge `{}` reuses the target code", b.name));
            }
        }
        Ok(())
    }
}

fn wire<R: Rng>(classes_t: &[usize], b: &BridgeSpec, k: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for (v, &cv) in classes_t.iter().enumerate() {
        for u in 0..b.count {
            let p = if u % k == cv { b.p_in } else { b.p_out };
            if rng.random_bool(p) {
                edges.push((v, u));
            }
        }
    }
    let n_noise = (b.noise_rate * edges.len() as f64).floor() as usize;
    let capacity = classes_t.len() * b.count;
    let mut present: HashSet<(usize, usize)> = edges.iter().copied().collect();
    let n_noise = n_noise.min(capacity - present.len());
    let mut added = 0;
    while added < n_noise {
        let e = (rng.random_range(0..classes_t.len()), rng.random_range(0..b.count));
        if present.insert(e) {
            edges.push(e);
            added += 1;
        }
    }
    edges
}

/// Builds the bundle. Deterministic per `spec.seed`.
pub fn synth_generate(spec: &SynthSpec) -> Result<Bundle> {
    spec.check()?;
    for b in &spec.bridges {
        if b.p_in < b.p_out {
            log::warn!("bridge `{}`: p_in < p_out, classes are anti-correlated with structure", b.name);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.target_count;
    let k = spec.classes;
    let classes: Vec<usize> = (0..n).map(|v| v % k).collect();

    let centroids = Array2::from_shape_fn((k, spec.feature_dim), |_| {
        let x: f64 = StandardNormal.sample(&mut rng);
        x
    });
    let features = Array2::from_shape_fn((n, spec.feature_dim), |(v, j)| {
        let e: f64 = StandardNormal.sample(&mut rng);
        centroids[[classes[v], j]] + spec.feature_noise * e
    });

    let mut node_types = vec![NodeType {
        name: spec.target_name.clone(),
        code: spec.target_code,
        count: n,
    }];
    let mut feats = vec![Some(features)];
    let mut relations = Vec::new();
    for (i, b) in spec.bridges.iter().enumerate() {
        node_types.push(NodeType {
            name: b.name.clone(),
            code: b.code,
            count: b.count,
        });
        feats.push(None);
        let edges = wire(&classes, b, k, &mut rng);
        relations.push(Relation {
            name: format!("{}-{}", spec.target_code, b.code),
            src: NodeTypeId(0),
            dst: NodeTypeId(i + 1),
            adj: CsrMatrix::from_triplets(n, b.count, edges.into_iter().map(|(v, u)| (v, u, 1u64)))?,
        });
    }
    let mut graph = HetGraph {
        node_types,
        features: feats,
        relations,
        labels: LabelSet::dense(&classes, k)?,
        target: NodeTypeId(0),
    };
    graph.add_missing_reverses();
    ensure_valid(&graph)?;
    let paths = spec
        .meta_paths
        .iter()
        .map(|p| graph.parse_metapath(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(Bundle {
        graph,
        paths,
        defaults: Defaults {
            tau: spec.tau,
            top_t: spec.top_t,
        },
        splits: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_graph;
    use crate::metapath::compose_metapath;

    #[test]
    fn deterministic_and_valid() {
        let a = synth_generate(&SynthSpec::small_acm(5)).unwrap();
        let b = synth_generate(&SynthSpec::small_acm(5)).unwrap();
        assert_eq!(a.graph, b.graph);
        assert!(validate_graph(&a.graph).is_empty());
        assert_eq!(a.graph.relations.len(), 4);
        assert_ne!(a.graph, synth_generate(&SynthSpec::small_acm(6)).unwrap().graph);
    }

    #[test]
    fn clean_wiring_is_block_diagonal() {
        let mut spec = SynthSpec::small_acm(1);
        for b in &mut spec.bridges {
            b.p_out = 0.0;
        }
        let bundle = synth_generate(&spec).unwrap();
        let labels = &bundle.graph.labels;
        for p in &bundle.paths {
            let mg = compose_metapath(&bundle.graph, p).unwrap();
            for (r, c, _) in mg.bool_adj.iter() {
                assert_eq!(labels.get(r), labels.get(c));
            }
        }
    }

    #[test]
    fn noise_adds_exact_edge_count() {
        let mut spec = SynthSpec::small_acm(2);
        let clean = synth_generate(&spec).unwrap().graph.relations[1].adj.nnz();
        spec.bridges[1].noise_rate = 0.3;
        // same seed, same clean edges drawn first; the noise follows
        let noisy = synth_generate(&spec).unwrap().graph.relations[1].adj.nnz();
        assert_eq!(noisy, clean + (0.3 * clean as f64).floor() as usize);
    }

    #[test]
    fn rejects_bad_probabilities() {
        let mut spec = SynthSpec::small_acm(0);
        spec.bridges[0].p_in = 1.5;
        assert!(synth_generate(&spec).is_err());
    }
}
