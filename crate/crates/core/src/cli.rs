//! Command-line front end. `lspi --help` lists the subcommands.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{LspiError, Result};
use crate::eval::{eval_classification, eval_clustering, ProbeConfig};
use crate::experiments::{degree_statistics, perturb_graph, robustness, run_ablation, sweep, SweepRow};
use crate::filter::filter_path;
use crate::graph::{HetGraph, MetaPath};
use crate::io::{load_bundle, read_embeddings, write_bundle, write_embeddings, write_embeddings_tsv, Bundle};
use crate::metapath::{compose_all, degree_sums, discriminate};
use crate::nn::checkpoint::save_checkpoint;
use crate::nn::gradcheck::{gradient_check, GradBatch};
use crate::nn::{sym_normalize, Activation, Model, ModelConfig};
use crate::synth::{synth_generate, SynthSpec};
use crate::train::{make_split, train, Split, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "lspi", version, about = "Meta-path filtering and embedding for heterogeneous graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Degree sums, average degrees, relative differences and the path partition.
    Stats(RunArgs),
    /// Write the filtered adjacency of every large path as TSV.
    Filter(RunArgs),
    /// Train and write metrics, embeddings and a checkpoint.
    Train(TrainArgs),
    /// SVM and k-means probes on stored embeddings.
    Eval(EvalArgs),
    /// Full model against the two single-branch variants.
    Ablate(RunArgs),
    /// Grid over tau and T.
    Sweep(RunArgs),
    /// Delete a fraction of nodes, optionally retraining on each result.
    Perturb(PerturbArgs),
    /// Generate a planted-partition bundle.
    Synth(SynthArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Bundle directory.
    pub bundle: PathBuf,
    /// Discrimination threshold(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub tau: Vec<f64>,
    /// Neighbor budget(s) on large paths, comma separated.
    #[arg(long = "T", value_delimiter = ',')]
    pub top_t: Vec<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Convolution layers per path.
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Output file or directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file with training settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Also run the SVM and k-means probes.
    #[arg(long)]
    pub probe: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub bundle: PathBuf,
    /// Binary embedding file written by `train`.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',')]
    pub ratios: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Fractions of nodes to delete, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05, 0.02])]
    pub fraction: Vec<f64>,
    /// Type codes to delete from; the target type when omitted.
    #[arg(long)]
    pub types: Option<String>,
    /// Retrain on each perturbed graph and print a CSV.
    #[arg(long)]
    pub train: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON or TOML generator spec; the built-in small preset when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise rate applied to the last bridging type.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Bundle to check on; a 12-node synthetic graph when omitted.
    pub bundle: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
}

/// Parses `args` and runs the command. Returns the process exit code:
/// 0 on success, 1 on data errors or a failed check, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_data_error() {
                1
            } else {
                2
            }
        }
    }
}

fn train_config(args: &RunArgs, bundle: &Bundle) -> Result<TrainConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| LspiError::io(path, e))?;
            let mut base: toml::Table = toml::from_str(&text).map_err(|e| LspiError::Schema {
                file: path.clone(),
                message: e.to_string(),
            })?;
            // bundle defaults apply unless the file sets them
            base.entry("tau").or_insert(toml::Value::Float(bundle.defaults.tau));
            base.entry("top_t")
                .or_insert(toml::Value::Integer(bundle.defaults.top_t as i64));
            base.try_into().map_err(|e: toml::de::Error| LspiError::Schema {
                file: path.clone(),
                message: e.to_string(),
            })?
        }
        None => TrainConfig {
            tau: bundle.defaults.tau,
            top_t: bundle.defaults.top_t,
            ..TrainConfig::default()
        },
    };
    if let Some(&tau) = args.tau.first() {
        cfg.tau = tau;
    }
    if let Some(&t) = args.top_t.first() {
        cfg.top_t = t;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(l) = args.layers {
        cfg.num_layers = l;
    }
    if let Some(m) = args.max_iters {
        cfg.max_iters = m;
    }
    cfg.check()?;
    Ok(cfg)
}

fn out_dir(args: &RunArgs) -> Result<Option<&Path>> {
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| LspiError::io(dir, e))?;
    }
    Ok(args.out.as_deref())
}

fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| LspiError::io(p, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Stats(a) => stats(&a),
        Command::Filter(a) => filter(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Eval(a) => eval_cmd(&a),
        Command::Ablate(a) => ablate(&a),
        Command::Sweep(a) => sweep_cmd(&a),
        Command::Perturb(a) => perturb(&a),
        Command::Synth(a) => synth(&a),
        Command::Gradcheck(a) => gradcheck(&a),
    }
    .map(|ok| ok.unwrap_or(true))
}

fn stats(a: &RunArgs) -> Result<Option<bool>> {
    let bundle = load_bundle(&a.bundle)?;
    let cfg = train_config(a, &bundle)?;
    let graphs = compose_all(&bundle.graph, &bundle.paths)?;
    let partition = discriminate(&graphs, cfg.tau)?;
    let sums = degree_sums(&graphs)?;
    let mut text = String::new();
    writeln!(text, "path\tdegree_sum\tavg_degree\tR\tpartition").unwrap();
    for (mg, (name, sum)) in graphs.iter().zip(&sums) {
        let r = partition.r_value(name).expect("every path has an R value");
        let side = if partition.is_large(name) { "large" } else { "small" };
        writeln!(text, "{name}\t{sum}\t{:.4}\t{r:.3}\t{side}", mg.average_degree()).unwrap();
    }
    writeln!(text, "tau = {}", cfg.tau).unwrap();
    let large: Vec<_> = graphs.iter().filter(|m| partition.is_large(&m.path.name)).collect();
    if !large.is_empty() {
        let d = degree_statistics(&large)?;
        writeln!(
            text,
            "large-path degrees: max {} min {} avg {:.2} median {}",
            d.max, d.min, d.avg, d.median
        )
        .unwrap();
    }
    emit(out_dir(a)?, "stats.tsv", &text)?;
    Ok(None)
}

fn filter(a: &RunArgs) -> Result<Option<bool>> {
    let bundle = load_bundle(&a.bundle)?;
    let cfg = train_config(a, &bundle)?;
    let graphs = compose_all(&bundle.graph, &bundle.paths)?;
    let partition = discriminate(&graphs, cfg.tau)?;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("filtered"));
    fs::create_dir_all(&out).map_err(|e| LspiError::io(&out, e))?;
    for p in bundle.paths.iter().filter(|p| partition.is_large(&p.name)) {
        let (adj, summary) = filter_path(&bundle.graph, p, cfg.top_t, cfg.epsilon)?;
        let mut text = String::new();
        for (r, c, _) in adj.adj.iter() {
            writeln!(text, "{r}\t{c}").unwrap();
        }
        let file = out.join(format!("{}.tsv", p.name));
        fs::write(&file, text).map_err(|e| LspiError::io(&file, e))?;
        println!(
            "{}: T = {}, {} of {} rows truncated, avg degree {:.2} -> {:.2}",
            p.name,
            summary.top_t,
            summary.rows_truncated,
            summary.rows,
            summary.average_degree_before,
            summary.average_retained_degree
        );
    }
    Ok(None)
}

fn bundle_split(bundle: &Bundle, cfg: &TrainConfig) -> Result<Split> {
    match &bundle.splits {
        Some(s) => Ok(s.clone()),
        None => make_split(&bundle.graph.labels, cfg.split, cfg.seed),
    }
}

fn train_cmd(a: &TrainArgs) -> Result<Option<bool>> {
    let bundle = load_bundle(&a.run.bundle)?;
    let mut cfg = train_config(&a.run, &bundle)?;
    if a.probe {
        cfg.probe.get_or_insert_with(ProbeConfig::default);
    }
    let outcome = match &bundle.splits {
        Some(s) => crate::train::train_with_split(&bundle.graph, &bundle.paths, &cfg, s, crate::train::Variant::Full)?,
        None => train(&bundle.graph, &bundle.paths, &cfg)?,
    };
    let r = &outcome.report;
    let out = a.run.out.clone().unwrap_or_else(|| PathBuf::from("run"));
    fs::create_dir_all(&out).map_err(|e| LspiError::io(&out, e))?;
    let json = serde_json::to_string_pretty(r)? + "\n";
    fs::write(out.join("metrics.json"), json).map_err(|e| LspiError::io(out.join("metrics.json"), e))?;
    write_embeddings(&outcome.embeddings, &out.join("embeddings.bin"))?;
    write_embeddings_tsv(&outcome.embeddings, &out.join("embeddings.tsv"))?;
    save_checkpoint(&outcome.model, &out.join("model.ckpt"))?;
    println!(
        "{} iterations (best {}), large paths [{}], test macro-F1 {:.4} micro-F1 {:.4}, {:.1}s",
        r.iterations,
        r.best_iteration,
        r.partition.large_paths.join(", "),
        r.test_macro_f1,
        r.test_micro_f1,
        r.wall_clock.as_secs_f64()
    );
    Ok(None)
}

fn eval_cmd(a: &EvalArgs) -> Result<Option<bool>> {
    let bundle = load_bundle(&a.bundle)?;
    let z = read_embeddings(&a.embeddings)?;
    let cfg = TrainConfig {
        seed: a.seed,
        ..TrainConfig::default()
    };
    let split = bundle_split(&bundle, &cfg)?;
    let mut probe = ProbeConfig::default();
    if !a.ratios.is_empty() {
        probe.train_ratios = a.ratios.clone();
    }
    let labels = &bundle.graph.labels;
    let classes = eval_classification(&z, labels, &split.test, &probe, a.seed)?;
    let clusters = eval_clustering(&z, labels, &split.test, &probe.kmeans, a.seed)?;
    let mut text = String::from("ratio\tmacro_f1\tmicro_f1\n");
    for c in &classes {
        writeln!(text, "{}\t{:.4}\t{:.4}", c.ratio, c.macro_f1, c.micro_f1).unwrap();
    }
    writeln!(text, "NMI {:.4}\tARI {:.4}", clusters.nmi, clusters.ari).unwrap();
    print!("{text}");
    if let Some(out) = &a.out {
        let json = serde_json::json!({ "classification": classes, "clustering": clusters });
        fs::write(out, serde_json::to_string_pretty(&json)? + "\n").map_err(|e| LspiError::io(out, e))?;
    }
    Ok(None)
}

fn ablate(a: &RunArgs) -> Result<Option<bool>> {
    let bundle = load_bundle(&a.bundle)?;
    let cfg = train_config(a, &bundle)?;
    let reports = run_ablation(&bundle.graph, &bundle.paths, &cfg)?;
    let mut text = String::from("variant\ttest_macro_f1\ttest_micro_f1\n");
    for r in &reports {
        writeln!(text, "{}\t{:.4}\t{:.4}", r.variant.label(), r.test_macro_f1, r.test_micro_f1).unwrap();
    }
    print!("{text}");
    if let Some(dir) = out_dir(a)? {
        let p = dir.join("ablation.json");
        fs::write(&p, serde_json::to_string_pretty(&reports)? + "\n").map_err(|e| LspiError::io(p, e))?;
    }
    Ok(None)
}

fn sweep_cmd(a: &RunArgs) -> Result<Option<bool>> {
    let bundle = load_bundle(&a.bundle)?;
    let cfg = train_config(a, &bundle)?;
    let taus = if a.tau.is_empty() { vec![cfg.tau] } else { a.tau.clone() };
    let ts = if a.top_t.is_empty() { vec![cfg.top_t] } else { a.top_t.clone() };
    let rows = sweep(&bundle.graph, &bundle.paths, &cfg, &taus, &ts)?;
    let mut text = format!("{}\n", SweepRow::CSV_HEADER);
    for r in rows {
        writeln!(text, "{}", r.csv()).unwrap();
    }
    emit(out_dir(a)?, "sweep.csv", &text)?;
    Ok(None)
}

fn resolve_types(g: &HetGraph, codes: &Option<String>) -> Result<Vec<crate::graph::NodeTypeId>> {
    let Some(codes) = codes else { return Ok(Vec::new()) };
    codes
        .chars()
        .filter(|c| c.is_alphanumeric())
        .map(|c| g.type_by_code(c).ok_or_else(|| LspiError::UnknownNodeType(c.to_string())))
        .collect()
}

fn perturb(a: &PerturbArgs) -> Result<Option<bool>> {
    let bundle = load_bundle(&a.run.bundle)?;
    let cfg = train_config(&a.run, &bundle)?;
    let types = resolve_types(&bundle.graph, &a.types)?;
    if a.train {
        if !types.is_empty() {
            return Err(LspiError::InvalidParameter("--train deletes target nodes only".into()));
        }
        let rows = robustness(&bundle.graph, &bundle.paths, &cfg, &a.fraction)?;
        let mut text = String::from("fraction,target_nodes,test_macro_f1,test_micro_f1\n");
        for r in rows {
            writeln!(text, "{},{},{:.6},{:.6}", r.fraction, r.target_nodes, r.test_macro_f1, r.test_micro_f1)
                .unwrap();
        }
        emit(out_dir(&a.run)?, "robustness.csv", &text)?;
        return Ok(None);
    }
    let out = a
        .run
        .out
        .clone()
        .ok_or_else(|| LspiError::InvalidParameter("perturb without --train needs --out".into()))?;
    for &f in &a.fraction {
        let g = perturb_graph(&bundle.graph, f, cfg.seed, &types)?;
        let paths = reparse(&g, &bundle.paths)?;
        let dir = if a.fraction.len() == 1 { out.clone() } else { out.join(format!("fraction-{f}")) };
        write_bundle(
            &Bundle {
                graph: g,
                paths,
                defaults: bundle.defaults,
                splits: None,
            },
            &dir,
        )?;
        println!("{}", dir.display());
    }
    Ok(None)
}

fn reparse(g: &HetGraph, paths: &[MetaPath]) -> Result<Vec<MetaPath>> {
    paths.iter().map(|p| g.parse_metapath(&p.name)).collect()
}

fn synth(a: &SynthArgs) -> Result<Option<bool>> {
    let mut spec = match &a.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| LspiError::io(path, e))?;
            let schema = |message: String| LspiError::Schema {
                file: path.clone(),
                message,
            };
            if path.extension().is_some_and(|e| e == "toml") {
                toml::from_str(&text).map_err(|e| schema(e.to_string()))?
            } else {
                serde_json::from_str(&text).map_err(|e| schema(e.to_string()))?
            }
        }
        None => SynthSpec::small_acm(0),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    if let Some(noise) = a.noise {
        let last = spec
            .bridges
            .last_mut()
            .ok_or_else(|| LspiError::InvalidParameter("spec has no bridging types".into()))?;
        last.noise_rate = noise;
    }
    let bundle = synth_generate(&spec)?;
    write_bundle(&bundle, &a.out)?;
    println!("{}", a.out.display());
    Ok(None)
}

fn gradcheck(a: &GradcheckArgs) -> Result<Option<bool>> {
    let bundle = match &a.bundle {
        Some(p) => load_bundle(p)?,
        None => synth_generate(&SynthSpec::tiny(a.seed))?,
    };
    let g = &bundle.graph;
    let features = g
        .target_features()
        .ok_or_else(|| LspiError::InvalidGraph("target type has no features".into()))?;
    let graphs = compose_all(g, &bundle.paths)?;
    let views = graphs
        .iter()
        .map(|m| sym_normalize(&m.path.name, &m.bool_adj))
        .collect::<Result<Vec<_>>>()?;
    let target = g.node_types[g.target.0].name.clone();
    let cfg = ModelConfig {
        input_dims: [(target.clone(), features.ncols())].into(),
        target_type: target,
        hidden_dim: 4,
        num_classes: g.labels.num_classes(),
        num_layers: 2,
        paths: bundle.paths.iter().map(|p| p.name.clone()).collect(),
        activation: Activation::Relu,
    };
    let model = Model::new(cfg, &mut ChaCha8Rng::seed_from_u64(a.seed))?;
    let idx: Vec<usize> = g.labels.labeled().map(|(v, _)| v).collect();
    let report = gradient_check(
        &model,
        &GradBatch {
            features: &Array2::clone(features),
            views: &views,
            labels: &g.labels,
            idx: &idx,
        },
        a.seed,
    )?;
    for (name, err) in &report.per_param {
        println!("{name}\t{err:.3e}");
    }
    let ok = report.max_rel_error < a.tolerance;
    println!(
        "max relative error {:.3e} over {} coordinates: {}",
        report.max_rel_error,
        report.coordinates_checked,
        if ok { "ok" } else { "FAILED" }
    );
    Ok(Some(ok))
}
