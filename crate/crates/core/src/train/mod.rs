//! End-to-end training: discriminate paths, filter the large ones, build
//! normalized views, then fit the model with Adam and early stopping.

pub mod split;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use split::{make_split, Split, SplitRatios};

use crate::error::{LspiError, Result};
use crate::eval::{self, ClassificationScore, ClusteringScore, ProbeConfig};
use crate::filter::{filter_path, FilterSummary, DEFAULT_EPSILON};
use crate::graph::{ensure_valid, HetGraph, LabelSet, MetaPath};
use crate::metapath::{compose_all, discriminate, PathPartition};
use crate::nn::{
    cross_entropy, forward, sym_normalize, Activation, AdamConfig, AdamState, Dropout, Model, ModelConfig,
    NormalizedAdjacency,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub feat_drop: f64,
    pub max_iters: usize,
    pub tau: f64,
    pub top_t: usize,
    /// Per-path budgets that replace `top_t` for the named paths.
    pub top_t_per_path: BTreeMap<String, usize>,
    pub num_layers: usize,
    /// Validation checks without improvement before stopping; `None` never stops early.
    pub patience: Option<usize>,
    pub seed: u64,
    pub activation: Activation,
    pub epsilon: f64,
    pub split: SplitRatios,
    /// Run the SVM and k-means probes on the test embeddings after training.
    pub probe: Option<ProbeConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 64,
            lr: 0.005,
            weight_decay: 6.0e-4,
            feat_drop: 0.5,
            max_iters: 1000,
            tau: 30.0,
            top_t: 500,
            top_t_per_path: BTreeMap::new(),
            num_layers: 2,
            patience: Some(30),
            seed: 0,
            activation: Activation::Relu,
            epsilon: DEFAULT_EPSILON,
            split: SplitRatios::default(),
            probe: None,
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(LspiError::InvalidParameter(m.into()));
        if self.hidden_dim == 0
            || self.num_layers == 0
            || self.max_iters == 0
            || self.top_t == 0
            || self.top_t_per_path.values().any(|&t| t == 0)
        {
            return bad("hidden_dim, num_layers, max_iters and top_t must be positive");
        }
        if !(self.lr > 0.0) || self.weight_decay < 0.0 || self.epsilon < 0.0 {
            return bad("lr must be positive, weight_decay and epsilon non-negative");
        }
        if !(0.0..1.0).contains(&self.feat_drop) {
            return bad("feat_drop must be in [0, 1)");
        }
        if self.tau.is_nan() || self.tau < 0.0 {
            return bad("tau must be >= 0");
        }
        if self.patience == Some(0) {
            return bad("patience must be positive");
        }
        Ok(())
    }
}

/// Which branch each path goes through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Discriminator decides: large paths are filtered, small ones are not.
    Full,
    /// No filtering on any path.
    WithoutLarge,
    /// Every path is filtered.
    WithoutSmall,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Full, Variant::WithoutLarge, Variant::WithoutSmall];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Full => "LSPI",
            Variant::WithoutLarge => "LSPI-w/o-L",
            Variant::WithoutSmall => "LSPI-w/o-S",
        }
    }
}

/// Normalized per-path views ready for the model.
#[derive(Debug, Clone)]
pub struct PreparedViews {
    pub partition: PathPartition,
    pub views: Vec<NormalizedAdjacency>,
    pub filters: Vec<FilterSummary>,
}

pub fn prepare_views(g: &HetGraph, paths: &[MetaPath], cfg: &TrainConfig, variant: Variant) -> Result<PreparedViews> {
    if paths.is_empty() {
        return Err(LspiError::EmptyInput("training needs at least one meta-path"));
    }
    let graphs = compose_all(g, paths)?;
    let names: Vec<String> = paths.iter().map(|p| p.name.clone()).collect();
    let partition = match variant {
        Variant::Full => discriminate(&graphs, cfg.tau)?,
        Variant::WithoutLarge => PathPartition::forced(&names, false),
        Variant::WithoutSmall => PathPartition::forced(&names, true),
    };
    let mut views = Vec::with_capacity(paths.len());
    let mut filters = Vec::new();
    for (p, mg) in paths.iter().zip(&graphs) {
        let adj = if partition.is_large(&p.name) {
            let top_t = cfg.top_t_per_path.get(&p.name).copied().unwrap_or(cfg.top_t);
            let (filtered, summary) = filter_path(g, p, top_t, cfg.epsilon)?;
            filters.push(summary);
            filtered.adj
        } else {
            mg.bool_adj.clone()
        };
        views.push(sym_normalize(&p.name, &adj)?);
    }
    Ok(PreparedViews {
        partition,
        views,
        filters,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub iteration: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub variant: Variant,
    pub seed: u64,
    pub tau: f64,
    pub top_t: usize,
    pub partition: PathPartition,
    pub filters: Vec<FilterSummary>,
    pub iterations: usize,
    pub best_iteration: usize,
    pub loss_curve: Vec<LossPoint>,
    pub betas: Vec<(String, f64)>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// Scores of the model's own classifier on the test split.
    pub test_macro_f1: f64,
    pub test_micro_f1: f64,
    pub classification: Vec<ClassificationScore>,
    pub clustering: Option<ClusteringScore>,
    /// Kept out of the JSON so reports are reproducible byte for byte.
    #[serde(skip)]
    pub wall_clock: Duration,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    /// Fused embeddings `Z` of every target node, from the best model.
    pub embeddings: Array2<f64>,
    pub predictions: Vec<usize>,
    pub split: Split,
    pub report: MetricsReport,
}

fn argmax_rows(a: &Array2<f64>) -> Vec<usize> {
    a.rows()
        .into_iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (c, &v)| if v > b.1 { (c, v) } else { b })
                .0
        })
        .collect()
}

fn scores_on(labels: &LabelSet, pred: &[usize], nodes: &[usize]) -> (f64, f64, f64) {
    let truth: Vec<usize> = nodes.iter().map(|&v| labels.get(v).expect("split nodes are labeled")).collect();
    let p: Vec<usize> = nodes.iter().map(|&v| pred[v]).collect();
    let k = labels.num_classes();
    (eval::accuracy(&truth, &p), eval::macro_f1(&truth, &p, k), eval::micro_f1(&truth, &p, k))
}

/// Trains with a split drawn from `cfg.seed` and the full variant.
pub fn train(g: &HetGraph, paths: &[MetaPath], cfg: &TrainConfig) -> Result<TrainOutcome> {
    let split = make_split(&g.labels, cfg.split, cfg.seed)?;
    train_with_split(g, paths, cfg, &split, Variant::Full)
}

pub fn train_with_split(
    g: &HetGraph,
    paths: &[MetaPath],
    cfg: &TrainConfig,
    split: &Split,
    variant: Variant,
) -> Result<TrainOutcome> {
    let start = Instant::now();
    cfg.check()?;
    ensure_valid(g)?;
    split.check(&g.labels)?;
    if split.train.is_empty() || split.val.is_empty() {
        return Err(LspiError::EmptyInput("train and validation splits must be nonempty"));
    }
    let features = g
        .target_features()
        .ok_or_else(|| LspiError::InvalidGraph("target type has no features".into()))?;
    let prepared = prepare_views(g, paths, cfg, variant)?;
    let target = g.node_types[g.target.0].name.clone();
    let model_cfg = ModelConfig {
        input_dims: BTreeMap::from([(target.clone(), features.ncols())]),
        target_type: target,
        hidden_dim: cfg.hidden_dim,
        num_classes: g.labels.num_classes(),
        num_layers: cfg.num_layers,
        paths: paths.iter().map(|p| p.name.clone()).collect(),
        activation: cfg.activation,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Model::new(model_cfg, &mut rng)?;
    let adam_cfg = AdamConfig {
        lr: cfg.lr,
        weight_decay: cfg.weight_decay,
        ..AdamConfig::default()
    };
    let mut adam = AdamState::new(adam_cfg, model.params().into_iter().map(|(_, p)| p));

    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    let mut best_iteration = 0;
    let mut since_best = 0;
    let mut curve = Vec::new();
    for it in 0..cfg.max_iters {
        let dropout = Dropout {
            rate: cfg.feat_drop,
            rng: &mut rng,
        };
        let mut fwd = forward(&model, features, &prepared.views, Some(dropout))?;
        let loss = cross_entropy(&mut fwd.tape, fwd.logits, &g.labels, &split.train)?;
        let train_loss = fwd.tape.scalar(loss);
        if !train_loss.is_finite() {
            return Err(LspiError::Divergence {
                iteration: it,
                loss: train_loss,
            });
        }
        let mut grads = fwd.tape.backward(loss);
        let gs: Vec<Array2<f64>> = fwd
            .params
            .iter()
            .zip(model.params())
            .map(|(&v, (_, p))| grads.take(v).unwrap_or_else(|| Array2::zeros(p.dim())))
            .collect();
        let refs: Vec<Option<&Array2<f64>>> = gs.iter().map(Some).collect();
        adam.step(&mut model.params_mut(), &refs)?;

        let mut eval_fwd = forward::<ChaCha8Rng>(&model, features, &prepared.views, None)?;
        let vloss = cross_entropy(&mut eval_fwd.tape, eval_fwd.logits, &g.labels, &split.val)?;
        let val_loss = eval_fwd.tape.scalar(vloss);
        if !val_loss.is_finite() {
            return Err(LspiError::Divergence {
                iteration: it,
                loss: val_loss,
            });
        }
        curve.push(LossPoint {
            iteration: it + 1,
            train_loss,
            val_loss,
        });
        if val_loss < best_val {
            best_val = val_loss;
            best = model.clone();
            best_iteration = it + 1;
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.patience.is_some_and(|p| since_best >= p) {
                log::debug!("early stop at iteration {} (best {best_iteration})", it + 1);
                break;
            }
        }
    }

    let fwd = forward::<ChaCha8Rng>(&best, features, &prepared.views, None)?;
    let embeddings = fwd.tape.value(fwd.z).clone();
    let predictions = argmax_rows(fwd.tape.value(fwd.logits));
    let betas = best.config.paths.iter().cloned().zip(fwd.betas()).collect();
    let (train_accuracy, _, _) = scores_on(&g.labels, &predictions, &split.train);
    let (test_accuracy, test_macro_f1, test_micro_f1) = if split.test.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        scores_on(&g.labels, &predictions, &split.test)
    };
    let (classification, clustering) = match &cfg.probe {
        Some(probe) if !split.test.is_empty() => (
            eval::eval_classification(&embeddings, &g.labels, &split.test, probe, cfg.seed)?,
            Some(eval::eval_clustering(&embeddings, &g.labels, &split.test, &probe.kmeans, cfg.seed)?),
        ),
        _ => (Vec::new(), None),
    };
    let report = MetricsReport {
        variant,
        seed: cfg.seed,
        tau: cfg.tau,
        top_t: cfg.top_t,
        partition: prepared.partition,
        filters: prepared.filters,
        iterations: curve.len(),
        best_iteration,
        loss_curve: curve,
        betas,
        train_accuracy,
        test_accuracy,
        test_macro_f1,
        test_micro_f1,
        classification,
        clustering,
        wall_clock: start.elapsed(),
    };
    Ok(TrainOutcome {
        model: best,
        embeddings,
        predictions,
        split: split.clone(),
        report,
    })
}

/// Embeddings of a trained model for the target nodes of `g`.
pub fn embed(model: &Model, g: &HetGraph, paths: &[MetaPath], cfg: &TrainConfig, variant: Variant) -> Result<Array2<f64>> {
    let features = g
        .target_features()
        .ok_or_else(|| LspiError::InvalidGraph("target type has no features".into()))?;
    let prepared = prepare_views(g, paths, cfg, variant)?;
    let fwd = forward::<ChaCha8Rng>(model, features, &prepared.views, None)?;
    Ok(fwd.tape.value(fwd.z).clone())
}
