//! Adam with decoupled weight decay.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{LspiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.005,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 6.0e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Array2<f64>>,
    second: Vec<Array2<f64>>,
}

impl AdamState {
    pub fn new<'a>(config: AdamConfig, params: impl IntoIterator<Item = &'a Array2<f64>>) -> Self {
        let first: Vec<_> = params.into_iter().map(|p| Array2::zeros(p.dim())).collect();
        let second = first.clone();
        Self {
            config,
            step: 0,
            first,
            second,
        }
    }

    /// One update. `grads[i]` belongs to `params[i]`; `None` is an error.
    ///
    /// Decay is applied to the parameter directly (`p -= lr * wd * p`), not
    /// folded into the gradient moments.
    pub fn step(&mut self, params: &mut [&mut Array2<f64>], grads: &[Option<&Array2<f64>>]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != params.len() {
            return Err(LspiError::dims("adam parameter count", self.first.len(), params.len()));
        }
        for (i, g) in grads.iter().enumerate() {
            match g {
                None => return Err(LspiError::MissingGradient(format!("#{i}"))),
                Some(g) if g.dim() != params[i].dim() => {
                    return Err(LspiError::dims("adam gradient", params[i].dim(), g.dim()))
                }
                _ => {}
            }
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for (i, p) in params.iter_mut().enumerate() {
            let g = grads[i].expect("checked above");
            Zip::from(&mut **p)
                .and(&mut self.first[i])
                .and(&mut self.second[i])
                .and(g)
                .for_each(|p, m, v, &g| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *p -= lr * (m_hat / (v_hat.sqrt() + eps) + weight_decay * *p);
                });
        }
        Ok(())
    }
}
