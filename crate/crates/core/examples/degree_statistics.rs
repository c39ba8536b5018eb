//! Pooled degree statistics of the large paths, each tried as the budget T.

use lspi::experiments::degree_statistics;
use lspi::metapath::{compose_all, discriminate};
use lspi::synth::{synth_generate, SynthSpec};
use lspi::train::{train, TrainConfig};

fn main() -> lspi::Result<()> {
    let bundle = synth_generate(&SynthSpec::noise_benchmark(0))?;
    let graphs = compose_all(&bundle.graph, &bundle.paths)?;
    let partition = discriminate(&graphs, bundle.defaults.tau)?;
    let large: Vec<_> = graphs.iter().filter(|m| partition.is_large(&m.path.name)).collect();
    let stats = degree_statistics(&large)?;
    println!("{:?} pooled: {stats:?}", partition.large_paths);

    for (name, t) in ["D_Max", "D_Min", "D_Avg", "D_Med"].iter().zip(stats.candidates()) {
        let cfg = TrainConfig {
            tau: bundle.defaults.tau,
            top_t: t.max(1),
            max_iters: 200,
            ..TrainConfig::default()
        };
        let r = train(&bundle.graph, &bundle.paths, &cfg)?.report;
        println!("T = {name} = {:>4}: macro-F1 {:.4}", t.max(1), r.test_macro_f1);
    }
    Ok(())
}
