//! Delete growing fractions of papers and retrain on each remainder.

use lspi::experiments::robustness;
use lspi::synth::{synth_generate, SynthSpec};
use lspi::train::TrainConfig;

fn main() -> lspi::Result<()> {
    let bundle = synth_generate(&SynthSpec::noise_benchmark(0))?;
    let cfg = TrainConfig {
        tau: bundle.defaults.tau,
        top_t: bundle.defaults.top_t,
        max_iters: 200,
        ..TrainConfig::default()
    };
    let fractions = [1.0 / 5.0, 1.0 / 10.0, 1.0 / 20.0, 1.0 / 50.0];
    println!("fraction  papers  macro-F1  micro-F1");
    for r in robustness(&bundle.graph, &bundle.paths, &cfg, &fractions)? {
        println!("{:>8.3}  {:>6}  {:>8.4}  {:>8.4}", r.fraction, r.target_nodes, r.test_macro_f1, r.test_micro_f1);
    }
    Ok(())
}
