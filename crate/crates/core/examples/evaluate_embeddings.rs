//! SVM and k-means probes on learned embeddings versus raw features.

use lspi::eval::{eval_classification, eval_clustering, ProbeConfig, SvmConfig};
use lspi::synth::{synth_generate, SynthSpec};
use lspi::train::{train, TrainConfig};

fn main() -> lspi::Result<()> {
    let bundle = synth_generate(&SynthSpec::noise_benchmark(2))?;
    let cfg = TrainConfig {
        tau: bundle.defaults.tau,
        top_t: bundle.defaults.top_t,
        max_iters: 300,
        seed: 2,
        ..TrainConfig::default()
    };
    let out = train(&bundle.graph, &bundle.paths, &cfg)?;
    let probe = ProbeConfig {
        svm: SvmConfig { epochs: 100, ..SvmConfig::default() },
        ..ProbeConfig::default()
    };
    let labels = &bundle.graph.labels;
    let test = &out.split.test;
    let raw = bundle.graph.target_features().expect("features").clone();
    for (name, z) in [("raw features", &raw), ("embeddings", &out.embeddings)] {
        println!("{name}");
        for s in eval_classification(z, labels, test, &probe, 0)? {
            println!("  ratio {:.1}: macro-F1 {:.4}  micro-F1 {:.4}", s.ratio, s.macro_f1, s.micro_f1);
        }
        let c = eval_clustering(z, labels, test, &probe.kmeans, 0)?;
        println!("  k-means: NMI {:.4}  ARI {:.4}", c.nmi, c.ari);
    }
    Ok(())
}
