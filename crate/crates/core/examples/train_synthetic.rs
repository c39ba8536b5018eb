//! Train on a planted graph and print the loss curve and path weights.
//!
//! cargo run --example train_synthetic -- [seed]

use lspi::synth::{synth_generate, SynthSpec};
use lspi::train::{train, TrainConfig};

fn main() -> lspi::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let bundle = synth_generate(&SynthSpec::small_acm(seed))?;
    let cfg = TrainConfig {
        tau: bundle.defaults.tau,
        top_t: bundle.defaults.top_t,
        max_iters: 200,
        seed,
        ..TrainConfig::default()
    };
    let out = train(&bundle.graph, &bundle.paths, &cfg)?;
    let r = &out.report;
    for p in r.loss_curve.iter().step_by(10) {
        println!("iter {:>4}  train {:.4}  val {:.4}", p.iteration, p.train_loss, p.val_loss);
    }
    println!("best iteration {} of {}", r.best_iteration, r.iterations);
    println!("large paths {:?}", r.partition.large_paths);
    for (path, beta) in &r.betas {
        println!("beta[{path}] = {beta:.4}");
    }
    println!(
        "train accuracy {:.3}, test accuracy {:.3}, test macro-F1 {:.3}",
        r.train_accuracy, r.test_accuracy, r.test_macro_f1
    );
    println!("embeddings {:?}, {} parameters", out.embeddings.dim(), out.model.num_parameters());
    Ok(())
}
