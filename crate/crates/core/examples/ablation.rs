//! Full model against its two single-branch variants on a noisy planted graph,
//! averaged over a few seeds.
//!
//! cargo run --example ablation -- [noise_rate] [seeds]

use lspi::experiments::run_ablation;
use lspi::synth::{synth_generate, SynthSpec};
use lspi::train::{TrainConfig, Variant};

fn main() -> lspi::Result<()> {
    let mut args = std::env::args().skip(1);
    let noise: f64 = args.next().map_or(0.3, |s| s.parse().expect("noise rate"));
    let seeds: u64 = args.next().map_or(5, |s| s.parse().expect("seed count"));

    let mut totals = [0.0; 3];
    for seed in 0..seeds {
        let mut spec = SynthSpec::noise_benchmark(seed);
        spec.bridges[1].noise_rate = noise;
        let bundle = synth_generate(&spec)?;
        let cfg = TrainConfig {
            tau: bundle.defaults.tau,
            top_t: bundle.defaults.top_t,
            max_iters: 300,
            seed,
            ..TrainConfig::default()
        };
        let reports = run_ablation(&bundle.graph, &bundle.paths, &cfg)?;
        for (total, r) in totals.iter_mut().zip(&reports) {
            *total += r.test_macro_f1;
        }
        let line: Vec<String> = reports.iter().map(|r| format!("{:.4}", r.test_macro_f1)).collect();
        println!("seed {seed}: {}", line.join("  "));
    }
    for (v, total) in Variant::ALL.iter().zip(totals) {
        println!("{:<12} mean macro-F1 {:.4}", v.label(), total / seeds as f64);
    }
    Ok(())
}
