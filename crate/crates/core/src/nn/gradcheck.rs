//! Central finite-difference check of the analytic backward pass.

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::layers::{cross_entropy, NormalizedAdjacency};
use super::model::{forward, Model};
use crate::error::Result;
use crate::graph::LabelSet;

pub const FD_STEP: f64 = 1e-5;
pub const SAMPLES_PER_TENSOR: usize = 200;
/// Floor on the relative-error denominator.
pub const REL_FLOOR: f64 = 1e-6;

/// Inputs of one full-graph loss evaluation.
pub struct GradBatch<'a> {
    pub features: &'a Array2<f64>,
    pub views: &'a [NormalizedAdjacency],
    pub labels: &'a LabelSet,
    pub idx: &'a [usize],
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub per_param: Vec<(String, f64)>,
    pub coordinates_checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Loss (no dropout) and its gradient for every model parameter.
pub fn loss_and_grads(model: &Model, batch: &GradBatch<'_>) -> Result<(f64, Vec<Array2<f64>>)> {
    let mut fwd = forward::<ChaCha8Rng>(model, batch.features, batch.views, None)?;
    let loss = cross_entropy(&mut fwd.tape, fwd.logits, batch.labels, batch.idx)?;
    let mut grads = fwd.tape.backward(loss);
    let out = fwd
        .params
        .iter()
        .zip(model.params())
        .map(|(&v, (_, p))| grads.take(v).unwrap_or_else(|| Array2::zeros(p.dim())))
        .collect();
    Ok((fwd.tape.scalar(loss), out))
}

pub fn loss_only(model: &Model, batch: &GradBatch<'_>) -> Result<f64> {
    let mut fwd = forward::<ChaCha8Rng>(model, batch.features, batch.views, None)?;
    let loss = cross_entropy(&mut fwd.tape, fwd.logits, batch.labels, batch.idx)?;
    Ok(fwd.tape.scalar(loss))
}

/// Compares `analytic[i]` against central differences of `loss` on a random
/// subsample (at least `samples` coordinates, or all of them) of each tensor.
/// Returns the maximum relative error per tensor.
pub fn finite_difference_errors<R, F>(
    params: &mut [Array2<f64>],
    analytic: &[Array2<f64>],
    mut loss: F,
    samples: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, usize)>
where
    R: Rng,
    F: FnMut(&[Array2<f64>]) -> Result<f64>,
{
    let mut worst = Vec::with_capacity(params.len());
    let mut checked = 0;
    for i in 0..params.len() {
        let len = params[i].len();
        let coords: Vec<usize> = if len <= samples {
            (0..len).collect()
        } else {
            sample(rng, len, samples).into_vec()
        };
        let mut max_err: f64 = 0.0;
        for k in coords {
            let (r, c) = (k / params[i].ncols(), k % params[i].ncols());
            let orig = params[i][[r, c]];
            params[i][[r, c]] = orig + FD_STEP;
            let up = loss(params)?;
            params[i][[r, c]] = orig - FD_STEP;
            let down = loss(params)?;
            params[i][[r, c]] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            max_err = max_err.max(relative_error(analytic[i][[r, c]], numeric));
            checked += 1;
        }
        worst.push(max_err);
    }
    Ok((worst, checked))
}

/// Checks the full LSPI loss gradient of `model` on `batch`.
pub fn gradient_check(model: &Model, batch: &GradBatch<'_>, seed: u64) -> Result<GradCheckReport> {
    let (_, analytic) = loss_and_grads(model, batch)?;
    let names: Vec<String> = model.params().into_iter().map(|(n, _)| n).collect();
    let mut params: Vec<Array2<f64>> = model.params().into_iter().map(|(_, p)| p.clone()).collect();
    let mut scratch = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (worst, checked) = finite_difference_errors(
        &mut params,
        &analytic,
        |ps| {
            for (dst, src) in scratch.params_mut().into_iter().zip(ps) {
                dst.assign(src);
            }
            loss_only(&scratch, batch)
        },
        SAMPLES_PER_TENSOR,
        &mut rng,
    )?;
    Ok(GradCheckReport {
        max_rel_error: worst.iter().copied().fold(0.0, f64::max),
        per_param: names.into_iter().zip(worst).collect(),
        coordinates_checked: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::tape::Tape;
    use ndarray::array;

    /// loss = sum(A · w) for a fixed A; gradient is the column sums of A.
    fn linear_loss(a: &Array2<f64>, w: &Array2<f64>) -> f64 {
        a.dot(w).sum()
    }

    fn linear_grad(a: &Array2<f64>, w: &Array2<f64>) -> Array2<f64> {
        let mut tape = Tape::new();
        let av = tape.leaf(a.clone());
        let wv = tape.leaf(w.clone());
        let y = tape.matmul(av, wv).unwrap();
        let m = tape.mean(y);
        let g = tape.backward(m);
        // mean = sum / len, rescale to the gradient of the sum
        g.get(wv).unwrap() * (a.nrows() * w.ncols()) as f64
    }

    #[test]
    fn linear_model_is_exact() {
        let a = array![[1.0, 2.0, -1.0], [0.5, -0.3, 2.0]];
        let w = array![[0.1, 0.2], [0.3, -0.4], [0.5, 0.6]];
        let grad = linear_grad(&a, &w);
        let mut params = vec![w.clone()];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (err, n) = finite_difference_errors(&mut params, &[grad], |p| Ok(linear_loss(&a, &p[0])), 200, &mut rng)
            .unwrap();
        assert_eq!(n, 6);
        assert!(err[0] < 1e-9, "{err:?}");
    }

    #[test]
    fn sign_flipped_backward_is_detected() {
        let a = array![[1.0, 2.0, -1.0], [0.5, -0.3, 2.0]];
        let w = array![[0.1, 0.2], [0.3, -0.4], [0.5, 0.6]];
        let grad = -linear_grad(&a, &w);
        let mut params = vec![w];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (err, _) = finite_difference_errors(&mut params, &[grad], |p| Ok(linear_loss(&a, &p[0])), 200, &mut rng)
            .unwrap();
        assert!((err[0] - 2.0).abs() < 1e-6, "{err:?}");
    }
}
