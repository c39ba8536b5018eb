//! Finite-difference check of every parameter gradient on a 12-paper graph.

use std::collections::BTreeMap;

use lspi::metapath::compose_all;
use lspi::nn::gradcheck::{gradient_check, GradBatch};
use lspi::nn::{sym_normalize, Activation, Model, ModelConfig};
use lspi::synth::{synth_generate, SynthSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lspi::Result<()> {
    let b = synth_generate(&SynthSpec::tiny(0))?;
    let features = b.graph.target_features().expect("features");
    let views = compose_all(&b.graph, &b.paths)?
        .iter()
        .map(|m| sym_normalize(&m.path.name, &m.bool_adj))
        .collect::<lspi::Result<Vec<_>>>()?;
    let cfg = ModelConfig {
        input_dims: BTreeMap::from([("paper".to_string(), features.ncols())]),
        target_type: "paper".into(),
        hidden_dim: 4,
        num_classes: 2,
        num_layers: 2,
        paths: b.paths.iter().map(|p| p.name.clone()).collect(),
        activation: Activation::Relu,
    };
    let model = Model::new(cfg, &mut ChaCha8Rng::seed_from_u64(0))?;
    let idx: Vec<usize> = (0..b.graph.target_count()).collect();
    let batch = GradBatch { features, views: &views, labels: &b.graph.labels, idx: &idx };
    let report = gradient_check(&model, &batch, 0)?;
    for (name, err) in &report.per_param {
        println!("{name:<16} {err:.2e}");
    }
    println!("max {:.2e} over {} coordinates", report.max_rel_error, report.coordinates_checked);
    Ok(())
}
