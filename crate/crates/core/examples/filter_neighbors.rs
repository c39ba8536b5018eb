//! Transit probabilities, importance scores and top-T selection on one path.
//!
//! cargo run --example filter_neighbors -- [T]

use lspi::filter::{importance_scores, metapath_transit, normalize_features, select_top, DEFAULT_EPSILON};
use lspi::synth::{synth_generate, SynthSpec};

fn main() -> lspi::Result<()> {
    let top_t: usize = std::env::args().nth(1).map_or(5, |s| s.parse().expect("T"));
    let bundle = synth_generate(&SynthSpec::noise_benchmark(0))?;
    let g = &bundle.graph;
    let path = bundle.paths.iter().find(|p| p.name == "PSP").expect("benchmark has PSP");

    let transit = metapath_transit(g, path)?;
    let h = normalize_features(&g.target_features().expect("paper features").view());
    let scores = importance_scores(&transit, &h.view(), DEFAULT_EPSILON)?;
    let kept = select_top(&scores, top_t)?;

    let same_class = |adj: &lspi::sparse::CsrMatrix<u8>| {
        let (mut same, mut total) = (0, 0);
        for (v, u, _) in adj.iter() {
            total += 1;
            same += usize::from(g.labels.get(v) == g.labels.get(u));
        }
        same as f64 / total.max(1) as f64
    };
    println!("{}: {} neighbor pairs before, {} after T = {top_t}", path.name, transit.probs.nnz(), kept.adj.nnz());
    println!("same-class share: {:.3} before, {:.3} after", same_class(&transit.probs.pattern()), same_class(&kept.adj));

    let (cols, vals) = scores.scores.row(0);
    let mut ranked: Vec<_> = cols.iter().zip(vals).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(a.1));
    println!("\npaper 0 (class {:?}), best five:", g.labels.get(0));
    for (u, s) in ranked.into_iter().take(5) {
        println!("  paper {u:>3}  class {:?}  score {s:.5}", g.labels.get(*u));
    }
    Ok(())
}
