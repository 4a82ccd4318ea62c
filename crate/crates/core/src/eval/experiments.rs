//! Multi-seed experiment drivers and their CSV output.

use std::io::Write;
use std::path::Path;

use crate::augment::Variant;
use crate::data::{inject_kg_noise, DataSplit, KnowledgeGraph};
use crate::numeric::{derive_seed, rng::stream, rng_from_seed};
use crate::trainer::{EpochReport, TrainConfig, Trainer};
use crate::{Error, Result, Scalar};

use super::RankingMetrics;

/// Result of one training run.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SeedRun {
    pub seed: u64,
    pub variant: Variant,
    /// The evaluation with the highest Recall among the scheduled ones (the
    /// early-stopping selection); the final parameters' evaluation when
    /// none was scheduled.
    pub metrics: RankingMetrics,
    pub best_epoch: usize,
    pub epochs_trained: usize,
    pub reports: Vec<EpochReport>,
}

fn train_once<F: Scalar>(split: &DataSplit, kg: &KnowledgeGraph, cfg: &TrainConfig) -> Result<SeedRun> {
    let mut t = Trainer::<F>::new(split, kg, cfg.clone())?;
    t.run()?;
    let best = t
        .reports()
        .iter()
        .filter_map(|r| r.metrics.as_ref().map(|m| (r.epoch, m)))
        .fold(None::<(usize, &RankingMetrics)>, |acc, (e, m)| match acc {
            Some((_, b)) if b.recall_at_n >= m.recall_at_n => acc,
            _ => Some((e, m)),
        });
    let (best_epoch, metrics) = match best {
        Some((e, m)) => (e, m.clone()),
        None => (
            t.next_epoch().saturating_sub(1),
            super::evaluate(&t.output()?, split, cfg.topn, None)?,
        ),
    };
    Ok(SeedRun {
        seed: cfg.seed,
        variant: cfg.variant,
        metrics,
        best_epoch,
        epochs_trained: t.next_epoch(),
        reports: t.reports().to_vec(),
    })
}

/// Trains `variant` once per seed on a fixed split.
pub fn run_ablation<F: Scalar>(
    split: &DataSplit,
    kg: &KnowledgeGraph,
    variant: Variant,
    cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<Vec<SeedRun>> {
    seeds
        .iter()
        .map(|&seed| {
            let cfg = TrainConfig {
                seed,
                variant,
                ..cfg.clone()
            };
            log::info!("training variant={} seed={seed}", variant.name());
            train_once::<F>(split, kg, &cfg)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct NoiseSeedResult {
    pub seed: u64,
    pub clean: RankingMetrics,
    pub noisy: RankingMetrics,
    /// `(clean − noisy) / clean` of Recall; 0 when the clean recall is 0.
    pub decrease: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct NoiseStudy {
    pub variant: Variant,
    pub fraction: f64,
    pub per_seed: Vec<NoiseSeedResult>,
    pub mean_decrease: f64,
}

/// Per seed, trains on the clean KG and on a copy with `fraction` extra
/// random triples drawn from the seed's noise stream, and compares the
/// selected Recall of the two runs.
pub fn run_noise_study<F: Scalar>(
    split: &DataSplit,
    kg: &KnowledgeGraph,
    fraction: f64,
    cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<NoiseStudy> {
    if fraction < 0.0 {
        return Err(Error::invalid(format!("noise fraction must be non-negative, got {fraction}")));
    }
    // Both runs of a seed share the split and training seed; only the KG differs.
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let cfg = TrainConfig { seed, ..cfg.clone() };
        let noisy_kg = inject_kg_noise(kg, fraction, &mut rng_from_seed(derive_seed(seed, &[stream::NOISE])))?;
        log::info!("noise study variant={} seed={seed}: clean run", cfg.variant.name());
        let clean = train_once::<F>(split, kg, &cfg)?.metrics;
        log::info!("noise study variant={} seed={seed}: noisy run", cfg.variant.name());
        let noisy = train_once::<F>(split, &noisy_kg, &cfg)?.metrics;
        let decrease = if clean.recall_at_n > 0.0 {
            (clean.recall_at_n - noisy.recall_at_n) / clean.recall_at_n
        } else {
            0.0
        };
        per_seed.push(NoiseSeedResult {
            seed,
            clean,
            noisy,
            decrease,
        });
    }
    let mean_decrease = mean_and_std(&per_seed.iter().map(|r| r.decrease).collect::<Vec<_>>()).0;
    Ok(NoiseStudy {
        variant: cfg.variant,
        fraction,
        per_seed,
        mean_decrease,
    })
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Standard error of the difference of two sample means.
pub fn pooled_standard_error(a: &[f64], b: &[f64]) -> f64 {
    let (_, sa) = mean_and_std(a);
    let (_, sb) = mean_and_std(b);
    (sa * sa / a.len().max(1) as f64 + sb * sb / b.len().max(1) as f64).sqrt()
}

/// One line of the metrics CSV.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ReportRow {
    pub epoch: usize,
    pub variant: String,
    pub group: String,
    pub recall: f64,
    pub ndcg: f64,
    pub seed: u64,
}

/// Rows for an evaluation: group `all` followed by each group, if any.
pub fn report_rows(epoch: usize, variant: Variant, seed: u64, m: &RankingMetrics) -> Vec<ReportRow> {
    let row = |group: &str, recall, ndcg| ReportRow {
        epoch,
        variant: variant.name().to_string(),
        group: group.to_string(),
        recall,
        ndcg,
        seed,
    };
    let mut rows = vec![row("all", m.recall_at_n, m.ndcg_at_n)];
    for g in m.per_group.iter().flatten() {
        rows.push(row(&g.name, g.recall, g.ndcg));
    }
    rows
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path).map(std::io::BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes `epoch,variant,group,recall,ndcg,seed`.
pub fn write_reports_csv(path: impl AsRef<Path>, rows: &[ReportRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "epoch,variant,group,recall,ndcg,seed").map_err(io)?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{}", r.epoch, r.variant, r.group, r.recall, r.ndcg, r.seed).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes one line per (variant, seed) of a noise study.
pub fn write_noise_csv(path: impl AsRef<Path>, studies: &[NoiseStudy]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "variant,seed,fraction,clean_recall,noisy_recall,decrease,clean_ndcg,noisy_ndcg").map_err(io)?;
    for s in studies {
        for r in &s.per_seed {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                s.variant.name(),
                r.seed,
                s.fraction,
                r.clean.recall_at_n,
                r.noisy.recall_at_n,
                r.decrease,
                r.clean.ndcg_at_n,
                r.noisy.ndcg_at_n
            )
            .map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
