//! Compose meta-paths on a planted graph and split them into large and small.
//!
//! cargo run --example discriminate_paths -- [tau]

use lspi::metapath::{compose_all, degree_sums, discriminate, discriminate_degrees};
use lspi::synth::{synth_generate, SynthSpec};

fn main() -> lspi::Result<()> {
    let tau: f64 = std::env::args().nth(1).map_or(30.0, |s| s.parse().expect("tau"));
    let bundle = synth_generate(&SynthSpec::small_acm(0))?;
    let graphs = compose_all(&bundle.graph, &bundle.paths)?;
    let partition = discriminate(&graphs, tau)?;
    for ((name, sum), mg) in degree_sums(&graphs)?.iter().zip(&graphs) {
        println!(
            "{name:<6} degree sum {sum:>6}  avg {:>7.2}  R {:>8.2}  {}",
            mg.average_degree(),
            partition.r_value(name).unwrap(),
            if partition.is_large(name) { "large" } else { "small" }
        );
    }

    // Only the ratio of degrees matters, so published averages work as well.
    let imdb = [("MAM", 19.95), ("MDM", 4.07), ("MAMAM", 280.2), ("MDMDM", 4.07)];
    let degrees: Vec<(String, f64)> = imdb.iter().map(|(n, d)| (n.to_string(), *d)).collect();
    let p = discriminate_degrees(&degrees, 200.0)?;
    println!("\nIMDB averages at tau = 200: large {:?}, small {:?}", p.large_paths, p.small_paths);
    for (name, r) in &p.r_values {
        println!("  R_{name} = {r:.3}");
    }
    Ok(())
}
