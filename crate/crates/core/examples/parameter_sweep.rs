//! Grid over the discrimination threshold and the neighbor budget, as CSV.

use lspi::experiments::{sweep, SweepRow};
use lspi::synth::{synth_generate, SynthSpec};
use lspi::train::TrainConfig;

fn main() -> lspi::Result<()> {
    let bundle = synth_generate(&SynthSpec::noise_benchmark(0))?;
    let cfg = TrainConfig {
        max_iters: 200,
        ..TrainConfig::default()
    };
    let rows = sweep(&bundle.graph, &bundle.paths, &cfg, &[30.0, 1000.0], &[5, 15, 50, 100])?;
    println!("{}", SweepRow::CSV_HEADER);
    for r in rows {
        println!("{}", r.csv());
    }
    Ok(())
}
