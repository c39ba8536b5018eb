//! Generate a bundle, write it to disk, load it back and compare.
//!
//! cargo run --example bundle_roundtrip -- [dir]

use lspi::graph::validate_graph;
use lspi::io::{load_bundle, write_bundle};
use lspi::synth::{synth_generate, SynthSpec};

fn main() -> lspi::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "synthetic-bundle".into());
    let dir = std::path::Path::new(&dir);
    let bundle = synth_generate(&SynthSpec::small_acm(0))?;
    write_bundle(&bundle, dir)?;
    let loaded = load_bundle(dir)?;
    println!("wrote and reloaded {}", dir.display());
    for t in &loaded.graph.node_types {
        println!("  type {} ({}): {} nodes", t.name, t.code, t.count);
    }
    for (a, b) in bundle.graph.relations.iter().zip(&loaded.graph.relations) {
        println!("  {:<4} {} edges, identical: {}", b.name, b.adj.nnz(), a.adj == b.adj);
    }
    println!("violations: {}", validate_graph(&loaded.graph).len());
    println!("meta-paths: {:?}", loaded.paths.iter().map(|p| &p.name).collect::<Vec<_>>());
    Ok(())
}
