//! Epoch loop: TransE pass, per-epoch view sampling, mini-batch joint-loss
//! steps, scheduled evaluation with early stopping, and text checkpoints.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::augment::{make_view_pair, AugmentConfig, Variant};
use crate::cf_encoder::{NormalizedAdjacency, PropagationOutput};
use crate::config;
use crate::data::{DataSplit, InteractionGraph, KnowledgeGraph};
use crate::eval::{evaluate, RankingMetrics};
use crate::kg_encoder::{aggregate_items, alternate_epoch};
use crate::losses::{joint_loss, BprTriple, LossBreakdown, LossConfig, NegativeScope, PreparedViews};
use crate::numeric::{
    derive_seed, init_params, rng::stream, rng_from_seed, AdamConfig, AdamState, Matrix, ParamStore, Rng, Tensor,
    VocabSizes,
};
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dim: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub layers: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau: f64,
    pub p_k: f64,
    pub p_tau: f64,
    pub p_a: f64,
    pub negative_scope: NegativeScope,
    pub seed: u64,
    /// Evaluate every this many epochs (0 disables scheduled evaluation).
    pub eval_every: usize,
    /// Evaluations without a Recall improvement before stopping (0 disables).
    pub early_stop_patience: usize,
    pub topn: usize,
    pub invert_keep_prob: bool,
    pub include_positive_in_denominator: bool,
    pub mixed_negatives: bool,
    pub variant: Variant,
    /// Run the TransE pass at the start of each epoch.
    pub transe: bool,
    pub transe_batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 64,
            lr: 1e-3,
            batch_size: 2048,
            epochs: 50,
            layers: 3,
            lambda1: 0.1,
            lambda2: 1e-4,
            tau: 0.2,
            p_k: 0.1,
            p_tau: 0.7,
            p_a: 0.7,
            negative_scope: NegativeScope::InBatch,
            seed: 2022,
            eval_every: 1,
            early_stop_patience: 10,
            topn: 20,
            invert_keep_prob: false,
            include_positive_in_denominator: false,
            mixed_negatives: false,
            variant: Variant::Full,
            transe: true,
            transe_batch_size: 2048,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must lie in (0, 1], got {v}")))
            }
        };
        if self.dim == 0 {
            return Err(Error::invalid("dim must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("lr must be positive, got {}", self.lr)));
        }
        if self.batch_size < 2 || self.transe_batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 2 and transe_batch_size positive"));
        }
        if !(1..=4).contains(&self.layers) {
            return Err(Error::invalid(format!("layers must lie in 1..=4, got {}", self.layers)));
        }
        if !(0.0..=1.0).contains(&self.lambda1) {
            return Err(Error::invalid(format!("lambda1 must lie in [0, 1], got {}", self.lambda1)));
        }
        if !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return Err(Error::invalid(format!("lambda2 must be non-negative, got {}", self.lambda2)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if !(0.0..1.0).contains(&self.p_k) {
            return Err(Error::invalid(format!("p_k must lie in [0, 1), got {}", self.p_k)));
        }
        unit("p_tau", self.p_tau)?;
        unit("p_a", self.p_a)?;
        if self.topn == 0 {
            return Err(Error::invalid("topn must be positive"));
        }
        Ok(())
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            tau: self.tau,
            layers: self.layers,
            scope: self.negative_scope,
            include_positive_in_denominator: self.include_positive_in_denominator,
            mixed_negatives: self.mixed_negatives,
        }
    }

    pub fn augment_config(&self) -> AugmentConfig {
        AugmentConfig {
            p_k: self.p_k,
            p_tau: self.p_tau,
            p_a: self.p_a,
            invert_keep_prob: self.invert_keep_prob,
            variant: self.variant,
        }
    }

    pub fn adam_config(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}

/// One epoch's mean losses and, when scheduled, its evaluation.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub loss: LossBreakdown,
    pub metrics: Option<RankingMetrics>,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl EpochReport {
    /// The report without its wall time, for comparisons across runs.
    pub fn timeless(&self) -> EpochReport {
        EpochReport {
            wall_time_secs: 0.0,
            ..self.clone()
        }
    }

    /// Single key=value progress line.
    pub fn log_line(&self, topn: usize) -> String {
        let (r, n) = match &self.metrics {
            Some(m) => (format!("{:.6}", m.recall_at_n), format!("{:.6}", m.ndcg_at_n)),
            None => ("NA".into(), "NA".into()),
        };
        format!(
            "epoch={} bpr={:.6} cl={:.6} te={:.6} recall@{topn}={r} ndcg@{topn}={n}",
            self.epoch, self.loss.bpr, self.loss.contrastive, self.loss.transe
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EarlyStopState {
    pub best_recall: f64,
    pub best_epoch: Option<usize>,
    pub evals_since_best: usize,
    pub stopped: bool,
}

impl Default for EarlyStopState {
    fn default() -> Self {
        EarlyStopState {
            best_recall: f64::NEG_INFINITY,
            best_epoch: None,
            evals_since_best: 0,
            stopped: false,
        }
    }
}

/// Vocabulary sizes implied by a training graph and knowledge graph.
pub fn vocab_for(train: &InteractionGraph, kg: &KnowledgeGraph) -> VocabSizes {
    VocabSizes {
        num_users: train.num_users(),
        num_entities: kg.num_entities().max(train.num_items()),
        num_relations: kg.num_relations(),
    }
}

/// Full-graph, full-KG final embeddings used for ranking.
pub fn model_output<F: Scalar>(
    store: &ParamStore<F>,
    adj: &NormalizedAdjacency<F>,
    kg: &KnowledgeGraph,
    layers: usize,
) -> Result<PropagationOutput<F>> {
    let agg = aggregate_items(store, kg, None);
    adj.propagate(store.users().clone(), agg.items, layers)
}

/// One `(user, positive, negative)` triple per training edge in shuffled
/// order; negatives are uniform over the user's non-interacted items. Users
/// who interacted with every item contribute nothing.
pub fn sample_bpr_triples(graph: &InteractionGraph, rng: &mut Rng) -> Vec<BprTriple> {
    let mut edges: Vec<(usize, usize)> = graph.edges().to_vec();
    edges.shuffle(rng);
    let ni = graph.num_items();
    edges
        .into_iter()
        .filter(|&(u, _)| graph.user_degree(u) < ni)
        .map(|(u, i)| loop {
            let j = rng.random_range(0..ni);
            if !graph.has_edge(u, j) {
                break (u, i, j);
            }
        })
        .collect()
}

fn epoch_rng(seed: u64, purpose: u64, epoch: usize) -> Rng {
    rng_from_seed(derive_seed(seed, &[purpose, epoch as u64]))
}

struct Snapshot<F> {
    store: ParamStore<F>,
    adam: AdamState<F>,
    adam_transe: AdamState<F>,
}

/// Resumable training state over borrowed data.
pub struct Trainer<'a, F: Scalar> {
    cfg: TrainConfig,
    split: &'a DataSplit,
    kg: &'a KnowledgeGraph,
    store: ParamStore<F>,
    adam: AdamState<F>,
    adam_transe: AdamState<F>,
    next_epoch: usize,
    early: EarlyStopState,
    full_adj: NormalizedAdjacency<F>,
    reports: Vec<EpochReport>,
}

impl<'a, F: Scalar> Trainer<'a, F> {
    pub fn new(split: &'a DataSplit, kg: &'a KnowledgeGraph, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        check_data(split, kg)?;
        let vocab = vocab_for(&split.train, kg);
        let store: ParamStore<F> = init_params(vocab, cfg.dim, &mut rng_from_seed(derive_seed(cfg.seed, &[stream::INIT])))?;
        let adam = AdamState::new(&store, cfg.adam_config());
        let adam_transe = AdamState::new(&store, cfg.adam_config());
        Ok(Trainer {
            full_adj: NormalizedAdjacency::new(&split.train, None),
            cfg,
            split,
            kg,
            store,
            adam,
            adam_transe,
            next_epoch: 0,
            early: EarlyStopState::default(),
            reports: Vec::new(),
        })
    }

    /// Continues from a checkpoint. `cfg` may differ from the saved
    /// configuration only in `epochs`.
    pub fn resume(split: &'a DataSplit, kg: &'a KnowledgeGraph, cfg: TrainConfig, ckpt: Checkpoint<F>) -> Result<Self> {
        cfg.validate()?;
        check_data(split, kg)?;
        let saved = TrainConfig {
            epochs: cfg.epochs,
            ..ckpt.config.clone()
        };
        if saved != cfg {
            return Err(Error::Checkpoint("configuration differs from the checkpoint's (other than epochs)".into()));
        }
        if ckpt.store.vocab() != vocab_for(&split.train, kg) || ckpt.store.dim() != cfg.dim {
            return Err(Error::Checkpoint("checkpoint tensor shapes do not match the data".into()));
        }
        Ok(Trainer {
            full_adj: NormalizedAdjacency::new(&split.train, None),
            cfg,
            split,
            kg,
            store: ckpt.store,
            adam: ckpt.adam,
            adam_transe: ckpt.adam_transe,
            next_epoch: ckpt.next_epoch,
            early: ckpt.early,
            reports: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn store(&self) -> &ParamStore<F> {
        &self.store
    }

    pub fn into_store(self) -> ParamStore<F> {
        self.store
    }

    pub fn reports(&self) -> &[EpochReport] {
        &self.reports
    }

    pub fn next_epoch(&self) -> usize {
        self.next_epoch
    }

    pub fn early_stop(&self) -> EarlyStopState {
        self.early
    }

    pub fn is_done(&self) -> bool {
        self.early.stopped || self.next_epoch >= self.cfg.epochs
    }

    pub fn checkpoint(&self) -> Checkpoint<F> {
        Checkpoint {
            config: self.cfg.clone(),
            next_epoch: self.next_epoch,
            early: self.early,
            store: self.store.clone(),
            adam: self.adam.clone(),
            adam_transe: self.adam_transe.clone(),
        }
    }

    /// Final embeddings of the current parameters.
    pub fn output(&self) -> Result<PropagationOutput<F>> {
        model_output(&self.store, &self.full_adj, self.kg, self.cfg.layers)
    }

    pub fn evaluate(&self) -> Result<RankingMetrics> {
        evaluate(&self.output()?, self.split, self.cfg.topn, None)
    }

    /// Runs epochs until the configured count or early stop. On divergence
    /// the state is rolled back to the start of the failing epoch.
    pub fn run(&mut self) -> Result<()> {
        while !self.is_done() {
            self.run_epoch()?;
        }
        Ok(())
    }

    pub fn run_epoch(&mut self) -> Result<&EpochReport> {
        let snapshot = Snapshot {
            store: self.store.clone(),
            adam: self.adam.clone(),
            adam_transe: self.adam_transe.clone(),
        };
        match self.epoch_inner() {
            Ok(report) => {
                log::info!("{}", report.log_line(self.cfg.topn));
                self.reports.push(report);
                Ok(self.reports.last().unwrap())
            }
            Err(e) => {
                self.store = snapshot.store;
                self.adam = snapshot.adam;
                self.adam_transe = snapshot.adam_transe;
                Err(match e {
                    Error::NonFiniteGradient { .. } => Error::Diverged { epoch: self.next_epoch },
                    other => other,
                })
            }
        }
    }

    fn epoch_inner(&mut self) -> Result<EpochReport> {
        let start = Instant::now();
        let epoch = self.next_epoch;
        let seed = self.cfg.seed;
        let transe = if self.cfg.transe {
            let mut rng = epoch_rng(seed, stream::TRANSE, epoch);
            alternate_epoch(&mut self.store, &mut self.adam_transe, self.kg, self.cfg.transe_batch_size, &mut rng)?
        } else {
            0.0
        };
        if !transe.is_finite() {
            return Err(Error::Diverged { epoch });
        }

        let train = &self.split.train;
        let pair = make_view_pair(
            &self.store,
            self.kg,
            train,
            &self.cfg.augment_config(),
            &mut epoch_rng(seed, stream::VIEWS, epoch),
        )?;
        let prepared = PreparedViews::with_full(self.full_adj.clone(), train, &pair);
        let triples = sample_bpr_triples(train, &mut epoch_rng(seed, stream::BPR, epoch));
        let loss_cfg = self.cfg.loss_config();
        let mut sum = LossBreakdown::default();
        for batch in triples.chunks(self.cfg.batch_size) {
            self.store.zero_grads();
            let b = joint_loss(&mut self.store, train, self.kg, &prepared, batch, &loss_cfg)?;
            if !b.total.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            self.adam.step(&mut self.store)?;
            let w = batch.len() as f64;
            sum.total += w * b.total;
            sum.bpr += w * b.bpr;
            sum.contrastive += w * b.contrastive;
            sum.l2 += w * b.l2;
        }
        self.store.zero_grads();
        let count = triples.len().max(1) as f64;
        let loss = LossBreakdown {
            total: sum.total / count,
            bpr: sum.bpr / count,
            contrastive: sum.contrastive / count,
            transe,
            l2: sum.l2 / count,
            lambda1: self.cfg.lambda1,
            lambda2: self.cfg.lambda2,
            tau: self.cfg.tau,
        };

        self.next_epoch += 1;
        let scheduled = self.cfg.eval_every > 0
            && (self.next_epoch % self.cfg.eval_every == 0 || self.next_epoch == self.cfg.epochs);
        let metrics = if scheduled {
            let m = evaluate(&self.output()?, self.split, self.cfg.topn, None)?;
            self.update_early_stop(epoch, m.recall_at_n);
            Some(m)
        } else {
            None
        };
        Ok(EpochReport {
            epoch,
            loss,
            metrics,
            wall_time_secs: start.elapsed().as_secs_f64(),
        })
    }

    fn update_early_stop(&mut self, epoch: usize, recall: f64) {
        if recall > self.early.best_recall {
            self.early.best_recall = recall;
            self.early.best_epoch = Some(epoch);
            self.early.evals_since_best = 0;
        } else {
            self.early.evals_since_best += 1;
            if self.cfg.early_stop_patience > 0 && self.early.evals_since_best >= self.cfg.early_stop_patience {
                log::info!("early stop after epoch {epoch}; best recall {recall:.6} at epoch {:?}", self.early.best_epoch);
                self.early.stopped = true;
            }
        }
    }
}

fn check_data(split: &DataSplit, kg: &KnowledgeGraph) -> Result<()> {
    if split.train.num_edges() == 0 {
        return Err(Error::invalid("training graph has no interactions"));
    }
    if kg.num_items() > split.train.num_items() {
        return Err(Error::invalid(format!(
            "knowledge graph covers {} items, interactions only {}",
            kg.num_items(),
            split.train.num_items()
        )));
    }
    if kg.num_items() < split.train.num_items() {
        return Err(Error::invalid("knowledge graph must be built for the interaction item count"));
    }
    Ok(())
}

/// Trains from scratch and returns the final parameters and epoch reports.
pub fn train<F: Scalar>(
    split: &DataSplit,
    kg: &KnowledgeGraph,
    cfg: &TrainConfig,
) -> Result<(ParamStore<F>, Vec<EpochReport>)> {
    let mut t = Trainer::new(split, kg, cfg.clone())?;
    t.run()?;
    let reports = std::mem::take(&mut t.reports);
    Ok((t.into_store(), reports))
}

/// Complete training state in a plain-text form that round-trips exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<F> {
    pub config: TrainConfig,
    pub next_epoch: usize,
    pub early: EarlyStopState,
    pub store: ParamStore<F>,
    pub adam: AdamState<F>,
    pub adam_transe: AdamState<F>,
}

const MAGIC: &str = "kgcl-checkpoint 1";

fn write_matrix<F: Scalar>(f: &mut fmt::Formatter<'_>, label: &str, m: &Matrix<F>) -> fmt::Result {
    writeln!(f, "matrix {label} {} {}", m.rows(), m.cols())?;
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|x| x.to_string()).collect();
        writeln!(f, "{}", row.join(" "))?;
    }
    Ok(())
}

fn write_adam<F: Scalar>(f: &mut fmt::Formatter<'_>, label: &str, a: &AdamState<F>) -> fmt::Result {
    let c = a.config();
    writeln!(f, "adam {label} {} {} {} {} {}", a.step_count(), c.lr, c.beta1, c.beta2, c.eps)?;
    for t in Tensor::ALL {
        write_matrix(f, &format!("{label}.first.{}", t.name()), a.first_moment(t))?;
        write_matrix(f, &format!("{label}.second.{}", t.name()), a.second_moment(t))?;
    }
    Ok(())
}

impl<F: Scalar> fmt::Display for Checkpoint<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{MAGIC}")?;
        writeln!(f, "scalar {}", F::NAME)?;
        writeln!(f, "next_epoch {}", self.next_epoch)?;
        writeln!(f, "best_recall {}", self.early.best_recall)?;
        match self.early.best_epoch {
            Some(e) => writeln!(f, "best_epoch {e}")?,
            None => writeln!(f, "best_epoch none")?,
        }
        writeln!(f, "evals_since_best {}", self.early.evals_since_best)?;
        writeln!(f, "stopped {}", self.early.stopped)?;
        let cfg = config::to_key_values(&self.config);
        writeln!(f, "config {}", cfg.len())?;
        for line in cfg {
            writeln!(f, "{line}")?;
        }
        for t in Tensor::ALL {
            write_matrix(f, &format!("param.{}", t.name()), self.store.param(t))?;
        }
        write_adam(f, "main", &self.adam)?;
        write_adam(f, "transe", &self.adam_transe)
    }
}

struct Lines<'s> {
    inner: std::iter::Enumerate<std::str::Lines<'s>>,
    line: usize,
}

impl<'s> Lines<'s> {
    fn err(&self, msg: impl fmt::Display) -> Error {
        Error::Checkpoint(format!("line {}: {msg}", self.line))
    }

    fn next(&mut self) -> Result<&'s str> {
        match self.inner.next() {
            Some((k, l)) => {
                self.line = k + 1;
                Ok(l)
            }
            None => Err(Error::Checkpoint(format!("unexpected end of file after line {}", self.line))),
        }
    }

    fn value<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let l = self.next()?;
        let rest = l
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected `{key}`")))?;
        rest.parse().map_err(|_| self.err(format!("bad value for `{key}`")))
    }

    fn matrix<F: Scalar>(&mut self, label: &str) -> Result<Matrix<F>> {
        let header = self.next()?;
        let parts: Vec<&str> = header.split(' ').collect();
        if parts.len() != 4 || parts[0] != "matrix" || parts[1] != label {
            return Err(self.err(format!("expected `matrix {label} <rows> <cols>`")));
        }
        let rows: usize = parts[2].parse().map_err(|_| self.err("bad row count"))?;
        let cols: usize = parts[3].parse().map_err(|_| self.err("bad column count"))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let l = self.next()?;
            let before = data.len();
            for tok in l.split(' ').filter(|t| !t.is_empty()) {
                data.push(tok.parse::<F>().map_err(|_| self.err(format!("bad number `{tok}`")))?);
            }
            if data.len() - before != cols {
                return Err(self.err(format!("expected {cols} values")));
            }
        }
        Ok(Matrix::from_vec(rows, cols, data))
    }

    fn adam<F: Scalar>(&mut self, label: &str) -> Result<AdamState<F>> {
        let header = self.next()?;
        let parts: Vec<&str> = header.split(' ').collect();
        if parts.len() != 7 || parts[0] != "adam" || parts[1] != label {
            return Err(self.err(format!("expected `adam {label} ...`")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| self.err(format!("bad number `{s}`")));
        let step: u64 = parts[2].parse().map_err(|_| self.err("bad step"))?;
        let config = AdamConfig {
            lr: num(parts[3])?,
            beta1: num(parts[4])?,
            beta2: num(parts[5])?,
            eps: num(parts[6])?,
        };
        let mut first = Vec::with_capacity(4);
        let mut second = Vec::with_capacity(4);
        for t in Tensor::ALL {
            first.push(self.matrix(&format!("{label}.first.{}", t.name()))?);
            second.push(self.matrix(&format!("{label}.second.{}", t.name()))?);
        }
        let arr = |v: Vec<Matrix<F>>| -> [Matrix<F>; 4] { v.try_into().ok().expect("four tensors") };
        Ok(AdamState::from_parts(config, step, arr(first), arr(second)))
    }
}

impl<F: Scalar> FromStr for Checkpoint<F> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = Lines {
            inner: s.lines().enumerate(),
            line: 0,
        };
        if lines.next()? != MAGIC {
            return Err(lines.err("not a checkpoint file"));
        }
        let scalar: String = lines.value("scalar")?;
        if scalar != F::NAME {
            return Err(lines.err(format!("checkpoint holds {scalar} values, expected {}", F::NAME)));
        }
        let next_epoch = lines.value("next_epoch")?;
        let best_recall = lines.value("best_recall")?;
        let best_epoch: String = lines.value("best_epoch")?;
        let best_epoch = match best_epoch.as_str() {
            "none" => None,
            e => Some(e.parse().map_err(|_| lines.err("bad best_epoch"))?),
        };
        let evals_since_best = lines.value("evals_since_best")?;
        let stopped = lines.value("stopped")?;
        let n_cfg: usize = lines.value("config")?;
        let mut cfg_lines = Vec::with_capacity(n_cfg);
        for _ in 0..n_cfg {
            cfg_lines.push(lines.next()?);
        }
        let config = config::from_key_values(cfg_lines.iter().copied(), TrainConfig::default())
            .map_err(|e| lines.err(format!("config: {e}")))?;
        let user = lines.matrix("param.user")?;
        let entity = lines.matrix("param.entity")?;
        let relation = lines.matrix("param.relation")?;
        let attention = lines.matrix("param.attention")?;
        let store = ParamStore::from_tensors(user, entity, relation, attention)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let adam = lines.adam("main")?;
        let adam_transe = lines.adam("transe")?;
        for a in [&adam, &adam_transe] {
            if Tensor::ALL.iter().any(|&t| {
                a.first_moment(t).shape() != store.param(t).shape() || a.second_moment(t).shape() != store.param(t).shape()
            }) {
                return Err(Error::Checkpoint("optimizer moments do not match parameter shapes".into()));
            }
        }
        if let Some((k, l)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::Checkpoint(format!("line {}: trailing content `{l}`", k + 1)));
        }
        Ok(Checkpoint {
            config,
            next_epoch,
            early: EarlyStopState {
                best_recall,
                best_epoch,
                evals_since_best,
                stopped,
            },
            store,
            adam,
            adam_transe,
        })
    }
}

impl<F: Scalar> Checkpoint<F> {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse().map_err(|e| match e {
            Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
