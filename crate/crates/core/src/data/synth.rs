//! Synthetic data with a known noise oracle.
//!
//! Users and items get Gaussian latent factors; each user draws
//! `edges_per_user` items (with replacement, then deduplicated) from a
//! softmax over latent affinities plus an item popularity bias. The KG has
//! `num_relations` groups of topic entities with their own latent vectors.
//! Every item links, per relation, to the topic entity closest to it in
//! latent space, so latent-similar items share entities. A random subset of
//! items additionally links to uniformly random topic entities under random
//! relations; those triples are labelled as noise.

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::{DataSplit, InteractionGraph, KnowledgeGraph, Triple};
use crate::numeric::Rng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthConfig {
    pub num_users: usize,
    pub num_items: usize,
    pub latent_dim: usize,
    pub edges_per_user: usize,
    pub num_relations: usize,
    pub entities_per_relation: usize,
    pub relevant_entities_per_item: usize,
    pub noise_entities_per_item: usize,
    pub noise_item_fraction: f64,
    pub test_fraction: f64,
    /// Scale on latent affinities; larger values concentrate each user on
    /// fewer items.
    pub affinity_scale: f64,
    /// Standard deviation of the per-item popularity bias.
    pub popularity_spread: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_users: 2000,
            num_items: 500,
            latent_dim: 8,
            edges_per_user: 20,
            num_relations: 4,
            entities_per_relation: 25,
            relevant_entities_per_item: 4,
            noise_entities_per_item: 4,
            noise_item_fraction: 0.2,
            test_fraction: 0.2,
            affinity_scale: 2.0,
            popularity_spread: 1.0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.num_users == 0 || self.num_items == 0 || self.latent_dim == 0 {
            return Err(Error::Infeasible("users, items and latent_dim must be positive".into()));
        }
        if self.edges_per_user > self.num_items {
            return Err(Error::Infeasible(format!(
                "edges_per_user {} exceeds num_items {}",
                self.edges_per_user, self.num_items
            )));
        }
        let topics = self.num_relations * self.entities_per_relation;
        if self.relevant_entities_per_item > topics {
            return Err(Error::Infeasible(format!(
                "{} relevant entities per item but only {topics} topic entities",
                self.relevant_entities_per_item
            )));
        }
        if (self.relevant_entities_per_item > 0 || self.noise_entities_per_item > 0) && topics == 0 {
            return Err(Error::Infeasible("entities requested but no topic entities configured".into()));
        }
        if self.relevant_entities_per_item + self.noise_entities_per_item > topics {
            return Err(Error::Infeasible("not enough distinct (relation, entity) pairs per item".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_item_fraction) {
            return Err(Error::Infeasible("noise_item_fraction must lie in [0, 1]".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Infeasible("test_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SynthData {
    /// All sampled interactions before the split.
    pub interactions: InteractionGraph,
    /// Number of draws before deduplication.
    pub sampled_edges: usize,
    pub kg: KnowledgeGraph,
    pub split: DataSplit,
    /// Ground truth per triple of `kg`.
    pub triple_is_noise: Vec<bool>,
    pub item_is_noisy: Vec<bool>,
}

fn gaussian_rows(rows: usize, dim: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..dim).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn synth_generate(cfg: &SynthConfig, rng: &mut Rng) -> Result<SynthData> {
    cfg.validate()?;
    let k = cfg.latent_dim;
    let users = gaussian_rows(cfg.num_users, k, rng);
    let items = gaussian_rows(cfg.num_items, k, rng);
    let bias: Vec<f64> = (0..cfg.num_items)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            cfg.popularity_spread * z
        })
        .collect();
    let scale = cfg.affinity_scale / (k as f64).sqrt();

    let mut edges = Vec::with_capacity(cfg.num_users * cfg.edges_per_user);
    let mut cumulative = vec![0.0; cfg.num_items];
    for (u, pu) in users.iter().enumerate() {
        let logits: Vec<f64> = items.iter().zip(&bias).map(|(qi, b)| scale * dot(pu, qi) + b).collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut acc = 0.0;
        for (c, l) in cumulative.iter_mut().zip(&logits) {
            acc += (l - max).exp();
            *c = acc;
        }
        for _ in 0..cfg.edges_per_user {
            let x = rng.random::<f64>() * acc;
            let i = cumulative.partition_point(|&c| c <= x).min(cfg.num_items - 1);
            edges.push((u, i));
        }
    }
    let sampled_edges = edges.len();
    let (interactions, _) = InteractionGraph::from_edges(cfg.num_users, cfg.num_items, edges)?;

    // topic entity ids: num_items + r * entities_per_relation + j
    let topics = gaussian_rows(cfg.num_relations * cfg.entities_per_relation, k, rng);
    let topic_id = |r: usize, j: usize| cfg.num_items + r * cfg.entities_per_relation + j;
    let mut triples = Vec::new();
    let mut noise = Vec::new();
    let num_noisy = (cfg.noise_item_fraction * cfg.num_items as f64).round() as usize;
    let mut item_is_noisy = vec![false; cfg.num_items];
    for i in index::sample(rng, cfg.num_items, num_noisy) {
        item_is_noisy[i] = true;
    }
    for (i, qi) in items.iter().enumerate() {
        let mut linked = std::collections::HashSet::new();
        for slot in 0..cfg.relevant_entities_per_item {
            let r = slot % cfg.num_relations;
            let rank = slot / cfg.num_relations;
            let mut group: Vec<usize> = (0..cfg.entities_per_relation).collect();
            group.sort_by(|&a, &b| {
                let sa = dot(qi, &topics[r * cfg.entities_per_relation + a]);
                let sb = dot(qi, &topics[r * cfg.entities_per_relation + b]);
                sb.total_cmp(&sa).then(a.cmp(&b))
            });
            let t = Triple::new(i, r, topic_id(r, group[rank]));
            linked.insert((t.relation, t.tail));
            triples.push(t);
            noise.push(false);
        }
        if item_is_noisy[i] {
            let mut added = 0;
            while added < cfg.noise_entities_per_item {
                let r = rng.random_range(0..cfg.num_relations);
                let j = rng.random_range(0..cfg.entities_per_relation);
                if linked.insert((r, topic_id(r, j))) {
                    triples.push(Triple::new(i, r, topic_id(r, j)));
                    noise.push(true);
                    added += 1;
                }
            }
        }
    }
    let (kg, _) = KnowledgeGraph::new(
        cfg.num_items,
        cfg.num_items + topics.len(),
        cfg.num_relations,
        triples,
    );
    let split = DataSplit::holdout(&interactions, cfg.test_fraction, rng)?;
    Ok(SynthData {
        interactions,
        sampled_edges,
        kg,
        split,
        triple_is_noise: noise,
        item_is_noisy,
    })
}
