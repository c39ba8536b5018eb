//! k-means with k-means++ seeding and restarts.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LspiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once inertia improves by less than this fraction.
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iters: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
    pub iterations: usize,
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus<R: Rng>(x: &ArrayView2<'_, f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = x.nrows();
    let mut centroids = Array2::zeros((k, x.ncols()));
    centroids.row_mut(0).assign(&x.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), centroids.row(0))).collect();
    for c in 1..k {
        let pick = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            // every point coincides with a centroid already
            Err(_) => rng.random_range(0..n),
        };
        centroids.row_mut(c).assign(&x.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), centroids.row(c)));
        }
    }
    centroids
}

fn assign(x: &ArrayView2<'_, f64>, centroids: &Array2<f64>, out: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (i, slot) in out.iter_mut().enumerate() {
        let (best, dist) = centroids
            .rows()
            .into_iter()
            .enumerate()
            .map(|(c, row)| (c, sq_dist(x.row(i), row)))
            .fold((0, f64::INFINITY), |b, cur| if cur.1 < b.1 { cur } else { b });
        *slot = best;
        inertia += dist;
    }
    inertia
}

fn lloyd<R: Rng>(x: &ArrayView2<'_, f64>, k: usize, cfg: &KMeansConfig, rng: &mut R) -> KMeansResult {
    let n = x.nrows();
    let mut centroids = plus_plus(x, k, rng);
    let mut assignments = vec![0; n];
    let mut inertia = assign(x, &centroids, &mut assignments);
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let mut sums = Array2::<f64>::zeros(centroids.dim());
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            sums.row_mut(c).scaled_add(1.0, &x.row(i));
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids.row_mut(c).assign(&(&sums.row(c) / counts[c] as f64));
            }
        }
        let next = assign(x, &centroids, &mut assignments);
        let improved = inertia - next;
        inertia = next;
        if improved <= cfg.tol * inertia.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    KMeansResult {
        assignments,
        centroids,
        inertia,
        iterations,
    }
}

/// Best-inertia clustering of the rows of `x` over `cfg.restarts` runs.
pub fn kmeans<R: Rng>(x: &ArrayView2<'_, f64>, k: usize, cfg: &KMeansConfig, rng: &mut R) -> Result<KMeansResult> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(LspiError::InvalidParameter(format!("k-means needs 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let mut best: Option<KMeansResult> = None;
    for _ in 0..cfg.restarts.max(1) {
        let run = lloyd(x, k, cfg, rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::nmi;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_separated_groups() {
        let x = array![[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [10.0, 10.0], [10.1, 10.0], [10.0, 10.1]];
        let r = kmeans(&x.view(), 2, &KMeansConfig::default(), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(nmi(&r.assignments, &[0, 0, 0, 1, 1, 1]), 1.0);
        assert!(r.inertia < 0.1);
    }

    #[test]
    fn identical_points() {
        let x = Array2::<f64>::ones((5, 3));
        let r = kmeans(&x.view(), 2, &KMeansConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(r.inertia, 0.0);
        let r = kmeans(&x.view(), 1, &KMeansConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(r.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn rejects_k_above_n() {
        let x = Array2::<f64>::zeros((2, 2));
        assert!(kmeans(&x.view(), 3, &KMeansConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
