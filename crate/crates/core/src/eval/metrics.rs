//! Classification and clustering scores.

use std::collections::BTreeMap;

/// Fraction of positions where `pred` equals `truth`.
pub fn accuracy(truth: &[usize], pred: &[usize]) -> f64 {
    assert_eq!(truth.len(), pred.len(), "accuracy: length mismatch");
    if truth.is_empty() {
        return 0.0;
    }
    let hits = truth.iter().zip(pred).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

/// Per-class `(tp, fp, fn)` over classes `0..k`.
fn confusion(truth: &[usize], pred: &[usize], k: usize) -> Vec<(u64, u64, u64)> {
    assert_eq!(truth.len(), pred.len(), "f1: length mismatch");
    let mut counts = vec![(0u64, 0u64, 0u64); k];
    for (&t, &p) in truth.iter().zip(pred) {
        if t == p {
            counts[t].0 += 1;
        } else {
            if p < k {
                counts[p].1 += 1;
            }
            counts[t].2 += 1;
        }
    }
    counts
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

/// Unweighted mean of per-class F1 over the classes present in `truth` or `pred`.
pub fn macro_f1(truth: &[usize], pred: &[usize], k: usize) -> f64 {
    let counts = confusion(truth, pred, k);
    let present: Vec<_> = counts.iter().filter(|(tp, fp, fn_)| tp + fp + fn_ > 0).collect();
    if present.is_empty() {
        return 0.0;
    }
    present.iter().map(|&&(tp, fp, fn_)| f1(tp, fp, fn_)).sum::<f64>() / present.len() as f64
}

/// F1 of the pooled counts. Equal to accuracy for single-label predictions.
pub fn micro_f1(truth: &[usize], pred: &[usize], k: usize) -> f64 {
    let (tp, fp, fn_) = confusion(truth, pred, k)
        .into_iter()
        .fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
    f1(tp, fp, fn_)
}

/// Contingency table between two labelings, with row and column sums.
struct Contingency {
    cells: Vec<u64>,
    rows: Vec<u64>,
    cols: Vec<u64>,
    n: u64,
}

fn relabel(xs: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    let out = xs
        .iter()
        .map(|x| {
            let next = ids.len();
            *ids.entry(*x).or_insert(next)
        })
        .collect();
    (out, ids.len())
}

fn contingency(a: &[usize], b: &[usize]) -> Contingency {
    assert_eq!(a.len(), b.len(), "contingency: length mismatch");
    let (a, ka) = relabel(a);
    let (b, kb) = relabel(b);
    let mut cells = vec![0u64; ka * kb];
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for (&i, &j) in a.iter().zip(&b) {
        cells[i * kb + j] += 1;
        rows[i] += 1;
        cols[j] += 1;
    }
    Contingency {
        cells,
        rows,
        cols,
        n: a.len() as u64,
    }
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    let mut sorted: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
    sorted.sort_unstable();
    sorted
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information, arithmetic-mean normalization.
/// Zero when either labeling has zero entropy.
pub fn nmi(truth: &[usize], pred: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let c = contingency(truth, pred);
    let n = c.n as f64;
    let (ha, hb) = (entropy(&c.rows, n), entropy(&c.cols, n));
    if ha == 0.0 || hb == 0.0 {
        return 0.0;
    }
    let kb = c.cols.len();
    let mut mi = 0.0;
    for (idx, &nij) in c.cells.iter().enumerate() {
        if nij == 0 {
            continue;
        }
        let (i, j) = (idx / kb, idx % kb);
        let nij = nij as f64;
        mi += nij / n * (n * nij / (c.rows[i] as f64 * c.cols[j] as f64)).ln();
    }
    // identical partitions give mi == ha == hb up to summation order
    if ha == hb && (mi - ha).abs() <= 1e-12 * ha {
        return 1.0;
    }
    (mi / ((ha + hb) / 2.0)).clamp(0.0, 1.0)
}

fn comb2(x: u64) -> u128 {
    let x = x as u128;
    x * x.saturating_sub(1) / 2
}

/// Adjusted Rand index. Two trivial partitions (one cluster each, or all
/// singletons on both sides) score 1.
pub fn ari(truth: &[usize], pred: &[usize]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let c = contingency(truth, pred);
    let index: u128 = c.cells.iter().map(|&x| comb2(x)).sum();
    let sum_a: u128 = c.rows.iter().map(|&x| comb2(x)).sum();
    let sum_b: u128 = c.cols.iter().map(|&x| comb2(x)).sum();
    let total = comb2(c.n);
    if total == 0 {
        return 1.0;
    }
    let expected = sum_a as f64 * sum_b as f64 / total as f64;
    let max = (sum_a + sum_b) as f64 / 2.0;
    if max == expected {
        return 1.0;
    }
    (index as f64 - expected) / (max - expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 2, 1, 0, 0];
        assert_eq!(macro_f1(&y, &y, 3), 1.0);
        assert_eq!(micro_f1(&y, &y, 3), 1.0);
        assert_eq!(nmi(&y, &y), 1.0);
        assert_eq!(ari(&y, &y), 1.0);
    }

    #[test]
    fn relabeled_clusters_score_one() {
        let y = [0, 0, 1, 1, 2, 2];
        let p = [2, 2, 0, 0, 1, 1];
        assert_eq!(nmi(&y, &p), 1.0);
        assert_eq!(ari(&y, &p), 1.0);
    }

    #[test]
    fn hand_computed_f1() {
        // class 0: tp 1, fp 1, fn 1 -> 0.5; class 1: tp 1, fp 1, fn 1 -> 0.5; class 2: tp 1 -> 1
        let y = [0, 0, 1, 1, 2];
        let p = [0, 1, 1, 0, 2];
        assert!((macro_f1(&y, &p, 3) - 2.0 / 3.0).abs() < 1e-12);
        assert!((micro_f1(&y, &p, 3) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn degenerate_entropy_gives_zero_nmi() {
        assert_eq!(nmi(&[0, 0, 0], &[0, 0, 0]), 0.0);
        assert_eq!(nmi(&[0, 1, 0], &[5, 5, 5]), 0.0);
    }

    #[test]
    fn ari_hand_example() {
        // standard worked example: ARI = 0.24242...
        let a = [0, 0, 0, 1, 1, 1];
        let b = [0, 0, 1, 1, 2, 2];
        assert!((ari(&a, &b) - 0.242_424_242_424_242_4).abs() < 1e-12);
        assert!((nmi(&a, &b) - 0.515_803_742_979_388_9).abs() < 1e-9);
    }

    #[test]
    fn ari_of_independent_split_is_negative_or_small() {
        let a = [0, 0, 1, 1];
        let b = [0, 1, 0, 1];
        assert!((ari(&a, &b) + 0.5).abs() < 1e-12);
    }
}
