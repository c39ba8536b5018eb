//! Stratified train / validation / test splits over labeled target nodes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LspiError, Result};
use crate::graph::LabelSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl Split {
    /// Checks disjointness and that every index is labeled.
    pub fn check(&self, labels: &LabelSet) -> Result<()> {
        let mut seen = vec![false; labels.len()];
        for &v in self.train.iter().chain(&self.val).chain(&self.test) {
            if v >= labels.len() || labels.get(v).is_none() {
                return Err(LspiError::Unlabeled(v));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(LspiError::InvalidParameter(format!("node {v} appears twice in the split")));
            }
        }
        Ok(())
    }
}

/// Fractions of labeled nodes per part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.1,
            val: 0.1,
            test: 0.8,
        }
    }
}

/// Per-class counts for one part: `floor(ratio * n_c)` plus largest
/// remainders until the part totals `round(ratio * n)`, never above `room`.
fn allocate(counts: &[usize], room: &[usize], ratio: f64) -> Vec<usize> {
    let n: usize = counts.iter().sum();
    let want = ((ratio * n as f64).round() as usize).min(room.iter().sum());
    let exact: Vec<f64> = counts.iter().map(|&c| ratio * c as f64).collect();
    let mut out: Vec<usize> = exact
        .iter()
        .zip(room)
        .map(|(&e, &r)| (e.floor() as usize).min(r))
        .collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut total: usize = out.iter().sum();
    while total < want {
        let before = total;
        for &c in &order {
            if total < want && out[c] < room[c] {
                out[c] += 1;
                total += 1;
            }
        }
        if total == before {
            break;
        }
    }
    out
}

/// Seeded stratified split. Each class is shuffled and cut into prefixes;
/// when the ratios sum to one the test part takes the remainder.
pub fn make_split(labels: &LabelSet, ratios: SplitRatios, seed: u64) -> Result<Split> {
    let SplitRatios { train, val, test } = ratios;
    if [train, val, test].iter().any(|r| !(0.0..=1.0).contains(r)) || train + val + test > 1.0 + 1e-9 {
        return Err(LspiError::InvalidParameter(format!(
            "split ratios must be in [0, 1] and sum to at most 1, got {train}/{val}/{test}"
        )));
    }
    let k = labels.num_classes();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (v, c) in labels.labeled() {
        members[c].push(v);
    }
    for (class, m) in members.iter().enumerate() {
        if !m.is_empty() && m.len() < 3 {
            return Err(LspiError::Stratify { class, count: m.len() });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for m in &mut members {
        m.shuffle(&mut rng);
    }
    let counts: Vec<usize> = members.iter().map(Vec::len).collect();
    let n_train = allocate(&counts, &counts, train);
    let room: Vec<usize> = counts.iter().zip(&n_train).map(|(c, t)| c - t).collect();
    let n_val = allocate(&counts, &room, val);
    let room: Vec<usize> = room.iter().zip(&n_val).map(|(r, v)| r - v).collect();
    let n_test = if (train + val + test - 1.0).abs() < 1e-9 {
        room.clone()
    } else {
        allocate(&counts, &room, test)
    };

    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        seed,
    };
    for (c, m) in members.iter().enumerate() {
        let (a, b) = (n_train[c], n_train[c] + n_val[c]);
        split.train.extend(&m[..a]);
        split.val.extend(&m[a..b]);
        split.test.extend(&m[b..b + n_test[c]]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize, k: usize) -> LabelSet {
        LabelSet::dense(&(0..n).map(|i| i % k).collect::<Vec<_>>(), k).unwrap()
    }

    #[test]
    fn ten_ten_eighty() {
        let s = make_split(&labels(100, 3), SplitRatios::default(), 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (10, 10, 80));
        s.check(&labels(100, 3)).unwrap();
    }

    #[test]
    fn deterministic_per_seed() {
        let l = labels(57, 4);
        let a = make_split(&l, SplitRatios::default(), 3).unwrap();
        assert_eq!(a, make_split(&l, SplitRatios::default(), 3).unwrap());
        let b = make_split(&l, SplitRatios::default(), 4).unwrap();
        assert_ne!(a.train, b.train);
        assert_eq!((a.train.len(), a.val.len(), a.test.len()), (b.train.len(), b.val.len(), b.test.len()));
    }

    #[test]
    fn partial_ratios_leave_nodes_out() {
        let l = labels(40, 2);
        let s = make_split(&l, SplitRatios { train: 0.25, val: 0.25, test: 0.25 }, 0).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (10, 10, 10));
    }

    #[test]
    fn tiny_class_cannot_be_stratified() {
        let l = LabelSet::dense(&[0, 0, 0, 1, 1], 2).unwrap();
        assert!(matches!(
            make_split(&l, SplitRatios::default(), 0),
            Err(LspiError::Stratify { class: 1, count: 2 })
        ));
    }

    #[test]
    fn rejects_oversized_ratios() {
        assert!(make_split(&labels(30, 2), SplitRatios { train: 0.5, val: 0.5, test: 0.5 }, 0).is_err());
    }
}
