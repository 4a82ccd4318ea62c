use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use kgcl::augment::{consistency_scores, Variant};
use kgcl::config;
use kgcl::data::{
    inject_kg_noise, load_interactions, load_kg, longtail_entity_filter, split_longtail_items, split_sparse_users,
    synth_generate, write_interactions, write_kg, write_noise_labels, write_user_lists, DataSplit, KnowledgeGraph,
    SynthConfig,
};
use kgcl::eval::{
    evaluate, mean_and_std, report_rows, run_ablation, run_noise_study, write_noise_csv, write_reports_csv, ReportRow,
    SeedRun,
};
use kgcl::losses::{gradient_curve, NegativeScope};
use kgcl::numeric::{derive_seed, rng::stream, rng_from_seed};
use kgcl::trainer::{Checkpoint, TrainConfig, Trainer};
use kgcl::{Error, Scalar};

#[derive(Parser)]
#[command(name = "kgcl", version, about = "Knowledge-graph contrastive recommender")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write reports.csv, summary.json, model.ckpt and config.resolved.
    Train(TrainCmd),
    /// Evaluate a checkpoint and print its metrics as JSON.
    Evaluate(EvaluateCmd),
    /// Multi-seed experiment drivers.
    Experiment(ExperimentCmd),
    /// Generate a synthetic dataset with noise labels.
    SynthGen(SynthCmd),
    /// Append random triples to a knowledge graph.
    InjectNoise(NoiseCmd),
    /// Contrastive gradient magnitude g(s) as CSV.
    GradientCurve(CurveCmd),
    /// Per-item structure consistency of a checkpoint.
    Consistency(ConsistencyCmd),
}

#[derive(Args)]
struct DataArgs {
    /// Training interactions, `user item item ...` per line.
    #[arg(long)]
    interactions: PathBuf,
    /// Held-out interactions; without it a per-user holdout is drawn from --interactions.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Knowledge graph, `head relation tail` per line.
    #[arg(long)]
    kg: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Precision {
    F32,
    F64,
}

/// Every training setting as an optional override of the config file.
#[derive(Args, Default)]
struct TrainOverrides {
    /// key=value file; the flags below take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    p_k: Option<f64>,
    #[arg(long)]
    p_tau: Option<f64>,
    #[arg(long)]
    p_a: Option<f64>,
    /// in-batch or full
    #[arg(long)]
    negative_scope: Option<NegativeScope>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    early_stop_patience: Option<usize>,
    #[arg(long)]
    topn: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    invert_keep_prob: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    include_positive_in_denominator: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    mixed_negatives: Option<bool>,
    /// full, no-kga or no-kgc
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    transe: Option<bool>,
    #[arg(long)]
    transe_batch_size: Option<usize>,
}

impl TrainOverrides {
    fn lines(&self) -> Vec<String> {
        fn kv<T: ToString>(out: &mut Vec<String>, key: &str, v: &Option<T>) {
            if let Some(v) = v {
                out.push(format!("{key}={}", v.to_string()));
            }
        }
        let mut out = Vec::new();
        kv(&mut out, "dim", &self.dim);
        kv(&mut out, "lr", &self.lr);
        kv(&mut out, "batch_size", &self.batch_size);
        kv(&mut out, "epochs", &self.epochs);
        kv(&mut out, "layers", &self.layers);
        kv(&mut out, "lambda1", &self.lambda1);
        kv(&mut out, "lambda2", &self.lambda2);
        kv(&mut out, "tau", &self.tau);
        kv(&mut out, "p_k", &self.p_k);
        kv(&mut out, "p_tau", &self.p_tau);
        kv(&mut out, "p_a", &self.p_a);
        kv(&mut out, "negative_scope", &self.negative_scope.map(|s| s.name()));
        kv(&mut out, "seed", &self.seed);
        kv(&mut out, "eval_every", &self.eval_every);
        kv(&mut out, "early_stop_patience", &self.early_stop_patience);
        kv(&mut out, "topn", &self.topn);
        kv(&mut out, "invert_keep_prob", &self.invert_keep_prob);
        kv(&mut out, "include_positive_in_denominator", &self.include_positive_in_denominator);
        kv(&mut out, "mixed_negatives", &self.mixed_negatives);
        kv(&mut out, "variant", &self.variant.map(|v| v.name()));
        kv(&mut out, "transe", &self.transe);
        kv(&mut out, "transe_batch_size", &self.transe_batch_size);
        out
    }

    fn resolve(&self) -> Result<TrainConfig> {
        let base = match &self.config {
            Some(path) => config::load(path, TrainConfig::default())?,
            None => TrainConfig::default(),
        };
        let lines = self.lines();
        let cfg = config::from_key_values(lines.iter().map(String::as_str), base)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    train: TrainOverrides,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Continue from a checkpoint; its settings win except `epochs`.
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    precision: Precision,
}

#[derive(Args)]
struct EvaluateCmd {
    #[arg(long)]
    ckpt: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Cutoff; defaults to the checkpoint's.
    #[arg(long)]
    topn: Option<usize>,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExperimentKind {
    Ablation,
    KgNoise,
    SparseUsers,
    LongTailItems,
    LongTailEntities,
}

#[derive(Args)]
struct ExperimentCmd {
    #[arg(value_enum)]
    kind: ExperimentKind,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    train: TrainOverrides,
    /// Number of training seeds, counting up from --seed.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Comma-separated variants; the default depends on the kind.
    #[arg(long, value_delimiter = ',')]
    variants: Vec<Variant>,
    /// Injected triples as a fraction of the KG (kg-noise).
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    /// Users with fewer training interactions are sparse (sparse-users).
    #[arg(long, default_value_t = 20)]
    threshold: usize,
    /// Item popularity groups (long-tail-items).
    #[arg(long, default_value_t = 5)]
    groups: usize,
    /// Share of least frequent entities treated as long-tail (long-tail-entities).
    #[arg(long, default_value_t = 0.2)]
    tail_fraction: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    precision: Precision,
}

#[derive(Args)]
struct SynthCmd {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2022)]
    seed: u64,
    /// key=value generator settings; the flags below take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    num_users: Option<usize>,
    #[arg(long)]
    num_items: Option<usize>,
    #[arg(long)]
    edges_per_user: Option<usize>,
    #[arg(long)]
    relevant_entities_per_item: Option<usize>,
    #[arg(long)]
    noise_entities_per_item: Option<usize>,
    #[arg(long)]
    noise_item_fraction: Option<f64>,
}

#[derive(Args)]
struct NoiseCmd {
    #[arg(long)]
    kg: PathBuf,
    /// Ids below this are items.
    #[arg(long)]
    num_items: usize,
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[arg(long, default_value_t = 2022)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write `head relation tail is_noise` labels.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct CurveCmd {
    #[arg(long, default_value_t = 0.2)]
    tau: f64,
    /// Grid points evenly spaced over [-1, 1].
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConsistencyCmd {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    kg: PathBuf,
    /// Training interactions; fixes the number of items.
    #[arg(long)]
    interactions: PathBuf,
    /// Defaults to the checkpoint's p_k.
    #[arg(long)]
    p_k: Option<f64>,
    /// Defaults to the checkpoint's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(c) => match c.precision {
            Precision::F32 => cmd_train::<f32>(&c),
            Precision::F64 => cmd_train::<f64>(&c),
        },
        Command::Evaluate(c) => cmd_evaluate(&c),
        Command::Experiment(c) => match c.precision {
            Precision::F32 => cmd_experiment::<f32>(&c),
            Precision::F64 => cmd_experiment::<f64>(&c),
        },
        Command::SynthGen(c) => cmd_synth(&c),
        Command::InjectNoise(c) => cmd_inject_noise(&c),
        Command::GradientCurve(c) => cmd_gradient_curve(&c),
        Command::Consistency(c) => cmd_consistency(&c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_data(args: &DataArgs, seed: u64) -> Result<(DataSplit, KnowledgeGraph)> {
    let split = match &args.test {
        Some(test) => DataSplit::load(&args.interactions, test)?,
        None => {
            let loaded = load_interactions(&args.interactions)?;
            if loaded.duplicates > 0 {
                log::warn!("dropped {} duplicate interactions", loaded.duplicates);
            }
            let mut rng = rng_from_seed(derive_seed(seed, &[stream::SPLIT]));
            DataSplit::holdout(&loaded.value, args.test_fraction, &mut rng)?
        }
    };
    let kg = load_kg(&args.kg, split.train.num_items())?;
    if kg.duplicates > 0 {
        log::warn!("dropped {} duplicate triples", kg.duplicates);
    }
    log::info!(
        "users={} items={} train_edges={} test_users={} entities={} relations={} triples={}",
        split.train.num_users(),
        split.train.num_items(),
        split.train.num_edges(),
        split.num_test_users(),
        kg.value.num_entities(),
        kg.value.num_relations(),
        kg.value.len()
    );
    Ok((split, kg.value))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("{}: cannot create directory", dir.display()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("{}: cannot write", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("{}: cannot write", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_train<F: Scalar>(c: &TrainCmd) -> Result<()> {
    let resumed = match &c.resume {
        Some(path) => Some(Checkpoint::<F>::load(path)?),
        None => None,
    };
    let cfg = match &resumed {
        // Flags other than --epochs are checked against the checkpoint by the trainer.
        Some(ck) => {
            let lines = c.train.lines();
            config::from_key_values(lines.iter().map(String::as_str), ck.config.clone())?
        }
        None => c.train.resolve()?,
    };
    let (split, kg) = load_data(&c.data, cfg.seed)?;
    create_dir(&c.out)?;
    config::save(c.out.join("config.resolved"), &cfg)?;

    let mut trainer = match resumed {
        Some(ck) => Trainer::<F>::resume(&split, &kg, cfg.clone(), ck)?,
        None => Trainer::<F>::new(&split, &kg, cfg.clone())?,
    };
    let outcome = trainer.run();
    // On divergence the trainer has rolled back, so this is the last finite state.
    trainer.checkpoint().save(c.out.join("model.ckpt"))?;
    let rows: Vec<ReportRow> = trainer
        .reports()
        .iter()
        .filter_map(|r| r.metrics.as_ref().map(|m| report_rows(r.epoch, cfg.variant, cfg.seed, m)))
        .flatten()
        .collect();
    write_reports_csv(c.out.join("reports.csv"), &rows)?;
    outcome?;

    let early = trainer.early_stop();
    let final_metrics = trainer.evaluate()?;
    let reports: Vec<_> = trainer.reports().iter().map(|r| r.timeless()).collect();
    let summary = json!({
        "config": cfg,
        "data": {
            "users": split.train.num_users(),
            "items": split.train.num_items(),
            "train_edges": split.train.num_edges(),
            "test_users": split.num_test_users(),
            "entities": kg.num_entities(),
            "relations": kg.num_relations(),
            "triples": kg.len(),
        },
        "epochs_trained": trainer.next_epoch(),
        "stopped_early": early.stopped,
        "best_epoch": early.best_epoch,
        "best_recall": early.best_epoch.map(|_| early.best_recall),
        "final": final_metrics,
        "epochs": reports,
    });
    write_json(&c.out.join("summary.json"), &summary)?;
    log::info!(
        "final recall@{n}={:.6} ndcg@{n}={:.6}",
        final_metrics.recall_at_n,
        final_metrics.ndcg_at_n,
        n = cfg.topn
    );
    Ok(())
}

fn load_any_checkpoint(path: &Path) -> Result<AnyCheckpoint> {
    match Checkpoint::<f64>::load(path) {
        Ok(ck) => Ok(AnyCheckpoint::F64(ck)),
        Err(first) => match Checkpoint::<f32>::load(path) {
            Ok(ck) => Ok(AnyCheckpoint::F32(ck)),
            Err(_) => Err(first.into()),
        },
    }
}

enum AnyCheckpoint {
    F32(Checkpoint<f32>),
    F64(Checkpoint<f64>),
}

impl AnyCheckpoint {
    fn config(&self) -> &TrainConfig {
        match self {
            AnyCheckpoint::F32(c) => &c.config,
            AnyCheckpoint::F64(c) => &c.config,
        }
    }
}

fn cmd_evaluate(c: &EvaluateCmd) -> Result<()> {
    let ck = load_any_checkpoint(&c.ckpt)?;
    let cfg = ck.config().clone();
    let topn = c.topn.unwrap_or(cfg.topn);
    let (split, kg) = load_data(&c.data, cfg.seed)?;
    let metrics = match ck {
        AnyCheckpoint::F32(ck) => evaluate_checkpoint(&split, &kg, ck, topn)?,
        AnyCheckpoint::F64(ck) => evaluate_checkpoint(&split, &kg, ck, topn)?,
    };
    let text = serde_json::to_string_pretty(&metrics)? + "\n";
    emit(c.out.as_deref(), &text)
}

fn evaluate_checkpoint<F: Scalar>(
    split: &DataSplit,
    kg: &KnowledgeGraph,
    ck: Checkpoint<F>,
    topn: usize,
) -> Result<kgcl::eval::RankingMetrics> {
    let cfg = ck.config.clone();
    let trainer = Trainer::resume(split, kg, cfg, ck)?;
    Ok(evaluate(&trainer.output()?, split, topn, None)?)
}

fn grouped_summary(runs: &[SeedRun]) -> serde_json::Value {
    let recalls: Vec<f64> = runs.iter().map(|r| r.metrics.recall_at_n).collect();
    let ndcgs: Vec<f64> = runs.iter().map(|r| r.metrics.ndcg_at_n).collect();
    let (recall_mean, recall_std) = mean_and_std(&recalls);
    let (ndcg_mean, ndcg_std) = mean_and_std(&ndcgs);
    let mut groups = Vec::new();
    if let Some(first) = runs.first().and_then(|r| r.metrics.per_group.as_ref()) {
        for (k, g) in first.iter().enumerate() {
            let per_run = |f: fn(&kgcl::eval::GroupMetrics) -> f64| -> Vec<f64> {
                runs.iter()
                    .filter_map(|r| r.metrics.per_group.as_ref().map(|p| f(&p[k])))
                    .collect()
            };
            groups.push(json!({
                "group": g.name,
                "recall_mean": mean_and_std(&per_run(|g| g.recall)).0,
                "ndcg_mean": mean_and_std(&per_run(|g| g.ndcg)).0,
            }));
        }
    }
    json!({
        "recall_mean": recall_mean,
        "recall_std": recall_std,
        "ndcg_mean": ndcg_mean,
        "ndcg_std": ndcg_std,
        "groups": groups,
        "per_seed": runs.iter().map(|r| json!({
            "seed": r.seed,
            "best_epoch": r.best_epoch,
            "epochs_trained": r.epochs_trained,
            "recall": r.metrics.recall_at_n,
            "ndcg": r.metrics.ndcg_at_n,
        })).collect::<Vec<_>>(),
    })
}

fn cmd_experiment<F: Scalar>(c: &ExperimentCmd) -> Result<()> {
    if c.seeds == 0 {
        bail!("--seeds must be positive");
    }
    let cfg = c.train.resolve()?;
    let seeds: Vec<u64> = (0..c.seeds).map(|k| cfg.seed.wrapping_add(k)).collect();
    let (split, kg) = load_data(&c.data, cfg.seed)?;
    create_dir(&c.out)?;
    config::save(c.out.join("config.resolved"), &cfg)?;
    let results = c.out.join("results.csv");

    let variants = if !c.variants.is_empty() {
        c.variants.clone()
    } else {
        match c.kind {
            ExperimentKind::Ablation => vec![Variant::Full, Variant::NoKga, Variant::NoKgc],
            ExperimentKind::KgNoise => vec![Variant::Full, Variant::NoKgc],
            _ => vec![cfg.variant],
        }
    };

    if c.kind == ExperimentKind::KgNoise {
        let mut studies = Vec::new();
        for &variant in &variants {
            let cfg = TrainConfig { variant, ..cfg.clone() };
            studies.push(run_noise_study::<F>(&split, &kg, c.fraction, &cfg, &seeds)?);
        }
        write_noise_csv(&results, &studies)?;
        let summary: Vec<_> = studies
            .iter()
            .map(|s| {
                let d: Vec<f64> = s.per_seed.iter().map(|r| r.decrease).collect();
                json!({
                    "variant": s.variant.name(),
                    "fraction": s.fraction,
                    "mean_decrease": s.mean_decrease,
                    "std_decrease": mean_and_std(&d).1,
                })
            })
            .collect();
        for s in &studies {
            log::info!("variant={} mean_decrease={:.6}", s.variant.name(), s.mean_decrease);
        }
        return write_json(&c.out.join("summary.json"), &json!({ "kind": "kg-noise", "variants": summary }));
    }

    let split = match c.kind {
        ExperimentKind::SparseUsers => split_sparse_users(&split, c.threshold)?,
        ExperimentKind::LongTailItems => split_longtail_items(&split, c.groups)?,
        ExperimentKind::LongTailEntities => longtail_entity_filter(&kg, &split, c.tail_fraction)?,
        _ => split,
    };
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &variant in &variants {
        let runs = run_ablation::<F>(&split, &kg, variant, &cfg, &seeds)?;
        for r in &runs {
            rows.extend(report_rows(r.best_epoch, variant, r.seed, &r.metrics));
        }
        let mut s = grouped_summary(&runs);
        log::info!(
            "variant={} recall_mean={:.6} recall_std={:.6}",
            variant.name(),
            s["recall_mean"],
            s["recall_std"]
        );
        s["variant"] = json!(variant.name());
        summary.push(s);
    }
    write_reports_csv(&results, &rows)?;
    let kind = c.kind.to_possible_value().map(|v| v.get_name().to_string());
    write_json(&c.out.join("summary.json"), &json!({ "kind": kind, "variants": summary }))
}

fn cmd_synth(c: &SynthCmd) -> Result<()> {
    let base = match &c.config {
        Some(path) => config::load(path, SynthConfig::default())?,
        None => SynthConfig::default(),
    };
    let mut lines = Vec::new();
    let mut kv = |key: &str, v: Option<String>| {
        if let Some(v) = v {
            lines.push(format!("{key}={v}"));
        }
    };
    kv("num_users", c.num_users.map(|v| v.to_string()));
    kv("num_items", c.num_items.map(|v| v.to_string()));
    kv("edges_per_user", c.edges_per_user.map(|v| v.to_string()));
    kv("relevant_entities_per_item", c.relevant_entities_per_item.map(|v| v.to_string()));
    kv("noise_entities_per_item", c.noise_entities_per_item.map(|v| v.to_string()));
    kv("noise_item_fraction", c.noise_item_fraction.map(|v| v.to_string()));
    let cfg: SynthConfig = config::from_key_values(lines.iter().map(String::as_str), base)?;

    let data = synth_generate(&cfg, &mut rng_from_seed(derive_seed(c.seed, &[stream::SYNTH])))?;
    create_dir(&c.out)?;
    config::save(c.out.join("synth.resolved"), &cfg)?;
    write_interactions(c.out.join("interactions.txt"), &data.interactions)?;
    write_interactions(c.out.join("train.txt"), &data.split.train)?;
    write_user_lists(c.out.join("test.txt"), &data.split.test)?;
    write_kg(c.out.join("kg.txt"), &data.kg)?;
    write_noise_labels(c.out.join("noise_labels.txt"), &data.kg, &data.triple_is_noise)?;
    log::info!(
        "wrote {} interactions, {} triples ({} noisy) to {}",
        data.interactions.num_edges(),
        data.kg.len(),
        data.triple_is_noise.iter().filter(|&&b| b).count(),
        c.out.display()
    );
    Ok(())
}

fn cmd_inject_noise(c: &NoiseCmd) -> Result<()> {
    let kg = load_kg(&c.kg, c.num_items)?.value;
    let noisy = inject_kg_noise(&kg, c.fraction, &mut rng_from_seed(derive_seed(c.seed, &[stream::NOISE])))?;
    write_kg(&c.out, &noisy)?;
    if let Some(path) = &c.labels {
        let labels: Vec<bool> = (0..noisy.len()).map(|k| k >= kg.len()).collect();
        write_noise_labels(path, &noisy, &labels)?;
    }
    log::info!("added {} triples", noisy.len() - kg.len());
    Ok(())
}

fn cmd_gradient_curve(c: &CurveCmd) -> Result<()> {
    if c.points < 2 {
        bail!("--points must be at least 2");
    }
    let step = 2.0 / (c.points - 1) as f64;
    let grid: Vec<f64> = (0..c.points).map(|k| (-1.0 + k as f64 * step).clamp(-1.0, 1.0)).collect();
    let curve = gradient_curve(c.tau, &grid)?;
    let mut text = format!("s0={},g0={}\ns,g\n", curve.s0, curve.g0);
    for (s, g) in &curve.points {
        text.push_str(&format!("{s},{g}\n"));
    }
    emit(c.out.as_deref(), &text)
}

fn cmd_consistency(c: &ConsistencyCmd) -> Result<()> {
    let ck = load_any_checkpoint(&c.ckpt)?;
    let cfg = ck.config();
    let p_k = c.p_k.unwrap_or(cfg.p_k);
    let seed = c.seed.unwrap_or(cfg.seed);
    let num_items = load_interactions(&c.interactions)?.value.num_items();
    let kg = load_kg(&c.kg, num_items)?.value;
    let mut rng = rng_from_seed(derive_seed(seed, &[stream::VIEWS]));
    let scores = match &ck {
        AnyCheckpoint::F32(ck) => check_vocab(ck, &kg).and_then(|_| Ok(consistency_scores(&ck.store, &kg, p_k, &mut rng)?)),
        AnyCheckpoint::F64(ck) => check_vocab(ck, &kg).and_then(|_| Ok(consistency_scores(&ck.store, &kg, p_k, &mut rng)?)),
    }?
    .0;
    let mut text = String::new();
    for (i, v) in scores.values.iter().enumerate() {
        text.push_str(&format!("{i} {v}\n"));
    }
    emit(c.out.as_deref(), &text)
}

fn check_vocab<F: Scalar>(ck: &Checkpoint<F>, kg: &KnowledgeGraph) -> Result<()> {
    let v = ck.store.vocab();
    if v.num_entities < kg.num_entities() || v.num_relations < kg.num_relations() {
        return Err(Error::InvalidInput(format!(
            "checkpoint has {} entities and {} relations but the KG needs {} and {}",
            v.num_entities,
            v.num_relations,
            kg.num_entities(),
            kg.num_relations()
        ))
        .into());
    }
    Ok(())
}
