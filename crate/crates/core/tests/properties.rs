use lspi::eval::{accuracy, ari, micro_f1, nmi};
use lspi::experiments::perturb_graph;
use lspi::filter::{importance_scores, metapath_transit, normalize_features, select_top, ImportanceScores, DEFAULT_EPSILON};
use lspi::graph::{validate_graph, LabelSet, MetaPath};
use lspi::nn::sym_normalize;
use lspi::sparse::CsrMatrix;
use lspi::synth::{synth_generate, SynthSpec};
use lspi::train::{make_split, SplitRatios};
use proptest::prelude::*;

fn score_matrix() -> impl Strategy<Value = (usize, Vec<(usize, usize, u8)>)> {
    (1usize..30).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n, 1u8..6), 0..200)))
}

fn scores(n: usize, entries: &[(usize, usize, u8)]) -> ImportanceScores {
    // small integer values give plenty of ties
    let m = CsrMatrix::from_triplets(n, n, entries.iter().map(|&(r, c, v)| (r, c, f64::from(v)))).unwrap();
    ImportanceScores { path: MetaPath { name: "X".into(), relations: vec![] }, scores: m, epsilon: DEFAULT_EPSILON }
}

proptest! {
    #[test]
    fn selection_size_and_self_retention((n, entries) in score_matrix(), t in 1usize..12) {
        let s = scores(n, &entries);
        let f = select_top(&s, t).unwrap();
        for v in 0..n {
            let (cols, _) = s.scores.row(v);
            let kept = f.adj.row(v).0;
            prop_assert_eq!(kept.len(), cols.len().min(t));
            prop_assert!(kept.iter().all(|c| cols.binary_search(c).is_ok()));
            if cols.binary_search(&v).is_ok() {
                prop_assert!(kept.binary_search(&v).is_ok());
            }
        }
    }

    #[test]
    fn selection_is_monotone_in_t((n, entries) in score_matrix(), t in 1usize..12) {
        let s = scores(n, &entries);
        let small = select_top(&s, t).unwrap();
        let large = select_top(&s, t + 1).unwrap();
        for v in 0..n {
            let big = large.adj.row(v).0;
            prop_assert!(small.adj.row(v).0.iter().all(|c| big.binary_search(c).is_ok()));
        }
    }

    #[test]
    fn filtering_ignores_feature_scale(seed in 0u64..50, scale in 0.01f64..100.0, t in 1usize..8) {
        let b = synth_generate(&SynthSpec::tiny(seed)).unwrap();
        let p = &b.paths[1];
        let transit = metapath_transit(&b.graph, p).unwrap();
        let h = b.graph.target_features().unwrap();
        let a = importance_scores(&transit, &normalize_features(&h.view()).view(), DEFAULT_EPSILON).unwrap();
        let scaled = h * scale;
        let c = importance_scores(&transit, &normalize_features(&scaled.view()).view(), DEFAULT_EPSILON).unwrap();
        for ((_, _, x), (_, _, y)) in a.scores.iter().zip(c.scores.iter()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
        prop_assert_eq!(select_top(&a, t).unwrap().adj, select_top(&c, t).unwrap().adj);
    }

    #[test]
    fn normalized_adjacency_is_symmetric(n in 1usize..25, pairs in prop::collection::vec((0usize..25, 0usize..25), 0..80)) {
        let sym: Vec<(usize, usize, u8)> = pairs
            .iter()
            .filter(|(a, b)| *a < n && *b < n)
            .flat_map(|&(a, b)| [(a, b, 1u8), (b, a, 1u8)])
            .collect();
        let adj = CsrMatrix::from_triplets(n, n, sym).unwrap().pattern();
        let m = sym_normalize("x", &adj).unwrap();
        let t = m.matrix().transpose();
        for ((r1, c1, x), (r2, c2, y)) in m.matrix().iter().zip(t.iter()) {
            prop_assert_eq!((r1, c1), (r2, c2));
            prop_assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn split_parts_are_disjoint_and_sized(classes in prop::collection::vec(0usize..3, 9..200), seed in any::<u64>()) {
        let mut labels = classes.clone();
        labels.extend([0, 0, 0, 1, 1, 1, 2, 2, 2]);
        let set = LabelSet::dense(&labels, 3).unwrap();
        let counts = set.class_counts();
        prop_assume!(counts.iter().all(|&c| c >= 3));
        let s = make_split(&set, SplitRatios::default(), seed).unwrap();
        s.check(&set).unwrap();
        let n = labels.len() as f64;
        prop_assert!((s.train.len() as f64 - 0.1 * n).abs() <= 1.0);
        prop_assert!((s.val.len() as f64 - 0.1 * n).abs() <= 1.0);
        prop_assert_eq!(s.train.len() + s.val.len() + s.test.len(), labels.len());
    }

    #[test]
    fn perturbation_removes_exact_count(seed in 0u64..1000, fraction in 0.01f64..0.5) {
        let b = synth_generate(&SynthSpec::small_acm(seed % 7)).unwrap();
        let n = b.graph.target_count();
        match perturb_graph(&b.graph, fraction, seed, &[]) {
            Ok(g) => {
                prop_assert_eq!(g.target_count(), n - (fraction * n as f64).floor() as usize);
                prop_assert!(validate_graph(&g).is_empty());
            }
            Err(e) => prop_assert!(matches!(e, lspi::LspiError::ClassEmptied(_))),
        }
    }

    #[test]
    fn cluster_scores_ignore_id_permutation(pred in prop::collection::vec(0usize..4, 2..100), seed in any::<u64>()) {
        let truth: Vec<usize> = (0..pred.len()).map(|i| (i as u64 ^ seed) as usize % 3).collect();
        let perm = [2usize, 0, 3, 1];
        let renamed: Vec<usize> = pred.iter().map(|&p| perm[p]).collect();
        prop_assert_eq!(nmi(&truth, &pred), nmi(&truth, &renamed));
        prop_assert_eq!(ari(&truth, &pred), ari(&truth, &renamed));
        let a = ari(&truth, &pred);
        prop_assert!((-0.5 - 1e-12..=1.0 + 1e-12).contains(&a));
        let m = nmi(&truth, &pred);
        prop_assert!((0.0..=1.0).contains(&m));
    }

    #[test]
    fn micro_f1_is_accuracy(pairs in prop::collection::vec((0usize..5, 0usize..5), 1..300)) {
        let (t, p): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        prop_assert_eq!(micro_f1(&t, &p, 5), accuracy(&t, &p));
    }
}
