use std::collections::BTreeMap;
use std::rc::Rc;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution};
use serde::{Deserialize, Serialize};

use super::layers::{graph_conv, subgraph_attention, AttentionVars, NormalizedAdjacency};
use super::tape::{Activation, Tape, Var};
use crate::error::{LspiError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Node type name -> input feature dimension, for every projected type.
    pub input_dims: BTreeMap<String, usize>,
    pub target_type: String,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub num_layers: usize,
    /// One convolution stack per path, in fusion order.
    pub paths: Vec<String>,
    pub activation: Activation,
}

/// All learnable LSPI parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    /// `d' x d_A` per node type.
    pub proj: BTreeMap<String, Array2<f64>>,
    /// Per path, `num_layers` matrices of shape `d' x d'`.
    pub conv: Vec<(String, Vec<Array2<f64>>)>,
    pub attn_weight: Array2<f64>,
    pub attn_bias: Array2<f64>,
    pub attn_query: Array2<f64>,
    /// `num_classes x d'`
    pub classifier: Array2<f64>,
}

fn glorot<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-limit..limit))
}

impl Model {
    pub fn new<R: Rng>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        if config.hidden_dim == 0 || config.num_layers == 0 || config.num_classes < 2 {
            return Err(LspiError::InvalidParameter(
                "hidden_dim and num_layers must be positive and num_classes >= 2".into(),
            ));
        }
        if config.paths.is_empty() {
            return Err(LspiError::EmptyInput("model needs at least one meta-path"));
        }
        if !config.input_dims.contains_key(&config.target_type) {
            return Err(LspiError::MissingProjection(config.target_type.clone()));
        }
        let d = config.hidden_dim;
        let proj = config
            .input_dims
            .iter()
            .map(|(t, &din)| (t.clone(), glorot(d, din, rng)))
            .collect();
        let conv = config
            .paths
            .iter()
            .map(|p| (p.clone(), (0..config.num_layers).map(|_| glorot(d, d, rng)).collect()))
            .collect();
        let attn_weight = glorot(d, d, rng);
        let attn_bias = Array2::zeros((1, d));
        let attn_query = glorot(d, 1, rng);
        let classifier = glorot(config.num_classes, d, rng);
        Ok(Self {
            config,
            proj,
            conv,
            attn_weight,
            attn_bias,
            attn_query,
            classifier,
        })
    }

    /// Parameters in a fixed order with stable names.
    pub fn params(&self) -> Vec<(String, &Array2<f64>)> {
        let mut out: Vec<(String, &Array2<f64>)> = Vec::new();
        for (t, w) in &self.proj {
            out.push((format!("proj.{t}"), w));
        }
        for (p, layers) in &self.conv {
            for (l, w) in layers.iter().enumerate() {
                out.push((format!("conv.{p}.{l}"), w));
            }
        }
        out.push(("attn.weight".into(), &self.attn_weight));
        out.push(("attn.bias".into(), &self.attn_bias));
        out.push(("attn.query".into(), &self.attn_query));
        out.push(("classifier".into(), &self.classifier));
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out: Vec<&mut Array2<f64>> = self.proj.values_mut().collect();
        for (_, layers) in &mut self.conv {
            out.extend(layers.iter_mut());
        }
        out.push(&mut self.attn_weight);
        out.push(&mut self.attn_bias);
        out.push(&mut self.attn_query);
        out.push(&mut self.classifier);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.params().iter().map(|(_, p)| p.len()).sum()
    }

    /// Rebuilds a model from named parameters, as produced by [`Model::params`].
    pub fn from_params(config: ModelConfig, named: Vec<(String, Array2<f64>)>) -> Result<Self> {
        let mut map: BTreeMap<String, Array2<f64>> = named.into_iter().collect();
        let mut take = |name: String, shape: (usize, usize)| -> Result<Array2<f64>> {
            let p = map
                .remove(&name)
                .ok_or_else(|| LspiError::InvalidParameter(format!("missing parameter `{name}`")))?;
            if p.dim() != shape {
                return Err(LspiError::dims(name, shape, p.dim()));
            }
            Ok(p)
        };
        let d = config.hidden_dim;
        let mut proj = BTreeMap::new();
        for (t, &din) in &config.input_dims {
            proj.insert(t.clone(), take(format!("proj.{t}"), (d, din))?);
        }
        let mut conv = Vec::new();
        for p in &config.paths {
            let layers = (0..config.num_layers)
                .map(|l| take(format!("conv.{p}.{l}"), (d, d)))
                .collect::<Result<Vec<_>>>()?;
            conv.push((p.clone(), layers));
        }
        Ok(Self {
            attn_weight: take("attn.weight".into(), (d, d))?,
            attn_bias: take("attn.bias".into(), (1, d))?,
            attn_query: take("attn.query".into(), (d, 1))?,
            classifier: take("classifier".into(), (config.num_classes, d))?,
            proj,
            conv,
            config,
        })
    }
}

/// Feature dropout on the projected target features.
pub struct Dropout<'a, R: Rng> {
    pub rate: f64,
    pub rng: &'a mut R,
}

/// Dropout mask with survivors scaled by `1 / (1 - rate)`.
pub fn dropout_mask<R: Rng>(shape: (usize, usize), rate: f64, rng: &mut R) -> Result<Array2<f64>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(LspiError::InvalidParameter(format!("dropout rate must be in [0, 1), got {rate}")));
    }
    let keep = Bernoulli::new(1.0 - rate).expect("probability in range");
    let scale = 1.0 / (1.0 - rate);
    Ok(Array2::from_shape_fn(shape, |_| if keep.sample(rng) { scale } else { 0.0 }))
}

/// Everything a forward pass recorded.
pub struct Forward {
    pub tape: Tape,
    /// Tape variables of [`Model::params`], same order.
    pub params: Vec<Var>,
    pub embeddings: Vec<Var>,
    pub z: Var,
    pub scores: Var,
    pub beta: Var,
    pub logits: Var,
}

impl Forward {
    pub fn betas(&self) -> Vec<f64> {
        self.tape.value(self.beta).iter().copied().collect()
    }
}

/// Full LSPI forward pass over the target type.
///
/// `views` holds one normalized adjacency per path, in `model.config.paths`
/// order; large paths carry their filtered adjacency, small paths the plain
/// meta-path connectivity.
pub fn forward<R: Rng>(
    model: &Model,
    features: &Array2<f64>,
    views: &[NormalizedAdjacency],
    dropout: Option<Dropout<'_, R>>,
) -> Result<Forward> {
    if views.len() != model.conv.len() {
        return Err(LspiError::dims("forward views", model.conv.len(), views.len()));
    }
    for ((name, _), view) in model.conv.iter().zip(views) {
        if *name != view.path {
            return Err(LspiError::InvalidParameter(format!(
                "view order mismatch: expected `{name}`, got `{}`",
                view.path
            )));
        }
    }
    let mut tape = Tape::new();
    let params: Vec<Var> = model
        .params()
        .into_iter()
        .map(|(_, p)| tape.leaf(p.clone()))
        .collect();

    let target_pos = model
        .proj
        .keys()
        .position(|t| *t == model.config.target_type)
        .ok_or_else(|| LspiError::MissingProjection(model.config.target_type.clone()))?;
    let n_proj = model.proj.len();
    let layers = model.config.num_layers;

    let x = tape.leaf(features.clone());
    let mut h0 = tape.matmul_nt(x, params[target_pos])?;
    if let Some(Dropout { rate, rng }) = dropout {
        if rate > 0.0 {
            let mask = dropout_mask(tape.value(h0).dim(), rate, rng)?;
            h0 = tape.mul_const(h0, Rc::new(mask))?;
        }
    }

    let mut embeddings = Vec::with_capacity(views.len());
    for (pi, view) in views.iter().enumerate() {
        let mut h = h0;
        for l in 0..layers {
            let w = params[n_proj + pi * layers + l];
            let act = if l + 1 < layers {
                model.config.activation
            } else {
                Activation::Identity
            };
            h = graph_conv(&mut tape, view, h, w, act)?;
        }
        embeddings.push(h);
    }

    let base = n_proj + views.len() * layers;
    let attn = AttentionVars {
        weight: params[base],
        bias: params[base + 1],
        query: params[base + 2],
    };
    let (z, scores, beta) = subgraph_attention(&mut tape, &embeddings, attn)?;
    let logits = tape.matmul_nt(z, params[base + 3])?;
    Ok(Forward {
        tape,
        params,
        embeddings,
        z,
        scores,
        beta,
        logits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dropout_zero_rate_is_identity_and_rate_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = dropout_mask((10, 10), 0.0, &mut rng).unwrap();
        assert!(m.iter().all(|&x| x == 1.0));

        let (n, r) = (200 * 50, 0.5);
        let m = dropout_mask((200, 50), r, &mut rng).unwrap();
        let zeros = m.iter().filter(|&&x| x == 0.0).count() as f64;
        let sigma = (n as f64 * r * (1.0 - r)).sqrt();
        assert!((zeros - n as f64 * r).abs() <= 3.0 * sigma);
        assert!(m.iter().all(|&x| x == 0.0 || x == 2.0));
        assert!(dropout_mask((2, 2), 1.0, &mut rng).is_err());
    }

    #[test]
    fn params_round_trip_through_names() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = ModelConfig {
            input_dims: BTreeMap::from([("paper".to_string(), 5)]),
            target_type: "paper".into(),
            hidden_dim: 4,
            num_classes: 3,
            num_layers: 2,
            paths: vec!["PAP".into(), "PSP".into()],
            activation: Activation::Relu,
        };
        let m = Model::new(cfg.clone(), &mut rng).unwrap();
        assert_eq!(m.params().len(), 1 + 4 + 4);
        let named = m.params().into_iter().map(|(n, p)| (n, p.clone())).collect();
        assert_eq!(Model::from_params(cfg, named).unwrap(), m);
    }
}
