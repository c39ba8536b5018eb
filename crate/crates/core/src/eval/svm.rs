//! One-vs-rest linear SVM trained by mini-batch subgradient descent on the
//! L2-regularized hinge loss.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LspiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// L2 strength on the weights (bias is not regularized).
    pub lambda: f64,
    pub lr: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 16,
            lambda: 1e-3,
            lr: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    /// Training-fold column means and scales used to standardize inputs.
    mean: Array1<f64>,
    scale: Array1<f64>,
    /// `k x d`
    weights: Array2<f64>,
    bias: Array1<f64>,
}

impl LinearSvm {
    /// Fits one binary classifier per class of `0..k`.
    pub fn fit<R: Rng>(x: &ArrayView2<'_, f64>, y: &[usize], k: usize, cfg: &SvmConfig, rng: &mut R) -> Result<Self> {
        let (n, d) = x.dim();
        if n != y.len() {
            return Err(LspiError::dims("svm labels", n, y.len()));
        }
        if n == 0 {
            return Err(LspiError::EmptyInput("svm training set is empty"));
        }
        if let Some(&c) = y.iter().find(|&&c| c >= k) {
            return Err(LspiError::InvalidParameter(format!("svm label {c} outside [0, {k})")));
        }
        if cfg.batch_size == 0 || cfg.lr <= 0.0 || cfg.lambda < 0.0 {
            return Err(LspiError::InvalidParameter("svm needs batch_size > 0, lr > 0, lambda >= 0".into()));
        }
        let mean = x.mean_axis(Axis(0)).expect("n > 0");
        let scale = x.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-12 { 1.0 / s } else { 1.0 });
        let xs = (x - &mean) * &scale;

        let mut weights = Array2::<f64>::zeros((k, d));
        let mut bias = Array1::<f64>::zeros(k);
        let mut order: Vec<usize> = (0..n).collect();
        let mut t = 0usize;
        for _ in 0..cfg.epochs {
            order.shuffle(rng);
            for batch in order.chunks(cfg.batch_size) {
                let eta = cfg.lr / (1.0 + cfg.lr * cfg.lambda * t as f64);
                t += 1;
                let mut gw = &weights * cfg.lambda;
                let mut gb = Array1::<f64>::zeros(k);
                let inv = 1.0 / batch.len() as f64;
                for &i in batch {
                    let row = xs.row(i);
                    let margins = weights.dot(&row) + &bias;
                    for c in 0..k {
                        let sign = if y[i] == c { 1.0 } else { -1.0 };
                        if sign * margins[c] < 1.0 {
                            gw.row_mut(c).scaled_add(-sign * inv, &row);
                            gb[c] -= sign * inv;
                        }
                    }
                }
                weights.scaled_add(-eta, &gw);
                bias.scaled_add(-eta, &gb);
            }
        }
        Ok(Self {
            mean,
            scale,
            weights,
            bias,
        })
    }

    /// Decision values, `n x k`.
    pub fn decision(&self, x: &ArrayView2<'_, f64>) -> Array2<f64> {
        let xs = (x - &self.mean) * &self.scale;
        xs.dot(&self.weights.t()) + &self.bias
    }

    /// Arg-max class per row, ties to the lower class.
    pub fn predict(&self, x: &ArrayView2<'_, f64>) -> Vec<usize> {
        self.decision(x)
            .rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (c, &v)| if v > best.1 { (c, v) } else { best })
                    .0
            })
            .collect()
    }
}
