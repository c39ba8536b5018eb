use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lspi::graph::{HetGraph, LabelSet, NodeType, NodeTypeId, Relation};
use lspi::io::{load_bundle, write_bundle, Bundle, Defaults};
use lspi::sparse::CsrMatrix;
use ndarray::Array2;

fn lspi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lspi")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn synth(dir: &Path) -> String {
    let out = dir.join("bundle");
    let o = lspi(&["synth", "--seed", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.to_str().unwrap().to_string()
}

/// Movies joined by disjoint actor and director groups. Boolean degree sums
/// are sums of squared group sizes: MAM 44² + 7² + 3² + 1² = 1995 and
/// MDM 20² + 2² + 1 + 1 + 1 = 407.
fn imdb_shaped(dir: &Path) {
    let n = 100;
    let groups = |sizes: &[usize]| -> Vec<(usize, usize, u64)> {
        let mut next = 0;
        let mut out = Vec::new();
        for (g, &size) in sizes.iter().enumerate() {
            for _ in 0..size {
                out.push((next, g, 1));
                next += 1;
            }
        }
        out
    };
    let actors = [44, 7, 3, 1];
    let directors = [20, 2, 1, 1, 1];
    let mut graph = HetGraph {
        node_types: vec![
            NodeType { name: "movie".into(), code: 'M', count: n },
            NodeType { name: "actor".into(), code: 'A', count: actors.len() },
            NodeType { name: "director".into(), code: 'D', count: directors.len() },
        ],
        features: vec![Some(Array2::eye(n)), None, None],
        relations: vec![
            Relation { name: "M-A".into(), src: NodeTypeId(0), dst: NodeTypeId(1), adj: CsrMatrix::from_triplets(n, 4, groups(&actors)).unwrap() },
            Relation { name: "M-D".into(), src: NodeTypeId(0), dst: NodeTypeId(2), adj: CsrMatrix::from_triplets(n, 5, groups(&directors)).unwrap() },
        ],
        labels: LabelSet::dense(&(0..n).map(|i| i % 3).collect::<Vec<_>>(), 3).unwrap(),
        target: NodeTypeId(0),
    };
    graph.add_missing_reverses();
    let paths = vec![graph.parse_metapath("MAM").unwrap(), graph.parse_metapath("MDM").unwrap()];
    write_bundle(&Bundle { graph, paths, defaults: Defaults { tau: 200.0, top_t: 500 }, splits: None }, dir).unwrap();
}

#[test]
fn stats_reports_relative_differences() {
    let dir = tempfile::tempdir().unwrap();
    imdb_shaped(dir.path());
    let o = lspi(&["stats", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("MAM\t1995\t19.9500\t390.172\tlarge"), "{text}");
    assert!(text.contains("MDM\t407\t4.0700\t0.000\tsmall"), "{text}");
}

#[test]
fn train_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let b = synth(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = lspi(&["train", &b, "--seed", "7", "--max-iters", "30", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, c) = (run("a"), run("c"));
    assert_eq!(fs::read(a.join("metrics.json")).unwrap(), fs::read(c.join("metrics.json")).unwrap());
    assert_eq!(fs::read(a.join("embeddings.bin")).unwrap(), fs::read(c.join("embeddings.bin")).unwrap());
    assert!(a.join("model.ckpt").exists() && a.join("embeddings.tsv").exists());

    let o = lspi(&["eval", &b, "--embeddings", a.join("embeddings.bin").to_str().unwrap(), "--ratios", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("NMI"));
}

#[test]
fn sweep_emits_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let b = synth(dir.path());
    let o = lspi(&["sweep", &b, "--T", "100,300,500,700,1000", "--max-iters", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6, "{text}");
    assert!(lines[0].starts_with("tau,top_t"));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let b = synth(dir.path());
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "hidden_dim = 16\nmax_iters = 12\npatience = 1000\n").unwrap();
    let out = dir.path().join("run");
    let o = lspi(&["train", &b, "--config", cfg.to_str().unwrap(), "--tau", "0", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics: serde_json::Value = serde_json::from_slice(&fs::read(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["iterations"], 12);
    assert_eq!(metrics["tau"], 0.0);
    assert_eq!(metrics["partition"]["large_paths"].as_array().unwrap().len(), 2);

    fs::write(&cfg, "hidden_dim = \"wide\"\n").unwrap();
    assert_eq!(lspi(&["train", &b, "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn filter_ablate_perturb_and_gradcheck() {
    let dir = tempfile::tempdir().unwrap();
    let b = synth(dir.path());
    let filtered = dir.path().join("filtered");
    let o = lspi(&["filter", &b, "--T", "3", "--out", filtered.to_str().unwrap()]);
    assert!(o.status.success());
    let psp = fs::read_to_string(filtered.join("PSP.tsv")).unwrap();
    assert!(psp.lines().count() <= 60 * 3);

    let o = lspi(&["ablate", &b, "--max-iters", "10"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("LSPI\t") && text.contains("LSPI-w/o-L") && text.contains("LSPI-w/o-S"));

    let p = dir.path().join("perturbed");
    let o = lspi(&["perturb", &b, "--fraction", "0.2", "--out", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(load_bundle(&p).unwrap().graph.target_count(), 48);

    let o = lspi(&["perturb", &b, "--train", "--max-iters", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 5);

    let o = lspi(&["gradcheck"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn exit_codes() {
    assert_eq!(lspi(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lspi(&["stats", "x", "--bogus"]).status.code(), Some(2));
    assert_eq!(lspi(&["stats", "/nonexistent/bundle"]).status.code(), Some(1));
    assert_eq!(lspi(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let b = synth(dir.path());
    assert_eq!(lspi(&["train", &b, "--layers", "0"]).status.code(), Some(2));
}
