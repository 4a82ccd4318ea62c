//! Knowledge-guided graph augmentation.
//!
//! Two random knowledge-graph masks give two aggregated embeddings per item;
//! their cosine is the item's structure consistency `c_i`. Consistency is
//! turned into per-edge *keep* probabilities for the interaction graph:
//!
//! ```text
//! w   = exp(c_i)
//! p'  = max((w − w_min) / (w_max − w_min), p_τ)     (1 when w_max = w_min)
//! p   = clamp(p_a · mean(p') · p', 0, 1)
//! ```
//!
//! Edges of consistent items are kept more often. `invert_keep_prob`
//! switches to treating `p` as the drop probability instead.

use rand::Rng as _;

use crate::data::{InteractionGraph, KnowledgeGraph};
use crate::kg_encoder::aggregate_items;
use crate::numeric::{Matrix, ParamStore, Rng};
use crate::{Error, Result, Scalar};

/// Which triples survive in one knowledge-graph view.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KgMask {
    keep: Vec<bool>,
    drop_rate: u64,
}

impl KgMask {
    pub fn all(len: usize) -> Self {
        KgMask {
            keep: vec![true; len],
            drop_rate: 0f64.to_bits(),
        }
    }

    /// A mask with explicit per-triple decisions.
    pub fn from_bools(keep: Vec<bool>) -> Self {
        let dropped = keep.iter().filter(|&&k| !k).count();
        let drop_rate = if keep.is_empty() { 0.0 } else { dropped as f64 / keep.len() as f64 };
        KgMask {
            keep,
            drop_rate: drop_rate.to_bits(),
        }
    }

    #[inline]
    pub fn keeps(&self, triple: usize) -> bool {
        self.keep[triple]
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    pub fn retained(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    pub fn drop_rate(&self) -> f64 {
        f64::from_bits(self.drop_rate)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.keep
    }
}

/// Drops each triple independently with probability `p_k`.
pub fn sample_kg_mask(kg: &KnowledgeGraph, p_k: f64, rng: &mut Rng) -> Result<KgMask> {
    if !(0.0..1.0).contains(&p_k) {
        return Err(Error::invalid(format!("KG drop rate must lie in [0, 1), got {p_k}")));
    }
    let keep = (0..kg.len()).map(|_| rng.random::<f64>() >= p_k).collect();
    Ok(KgMask {
        keep,
        drop_rate: p_k.to_bits(),
    })
}

/// Per-item cosine between two views' aggregated embeddings, in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyScores {
    pub values: Vec<f64>,
}

impl ConsistencyScores {
    pub fn uniform(num_items: usize) -> Self {
        ConsistencyScores {
            values: vec![1.0; num_items],
        }
    }
}

/// Cosine of two rows. Bitwise-equal rows (including two zero rows) score
/// exactly 1; a zero row against a non-zero one scores 0.
pub fn cosine<F: Scalar>(a: &[F], b: &[F]) -> f64 {
    if a == b {
        return 1.0;
    }
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x.f64(), y.f64());
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return 0.0;
    }
    (ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0)
}

pub fn consistency_between<F: Scalar>(a: &Matrix<F>, b: &Matrix<F>) -> ConsistencyScores {
    ConsistencyScores {
        values: (0..a.rows()).map(|i| cosine(a.row(i), b.row(i))).collect(),
    }
}

/// Consistency of every item under the two given masks.
pub fn consistency_with_masks<F: Scalar>(
    store: &ParamStore<F>,
    kg: &KnowledgeGraph,
    masks: &[KgMask; 2],
) -> ConsistencyScores {
    let a = aggregate_items(store, kg, Some(&masks[0]));
    let b = aggregate_items(store, kg, Some(&masks[1]));
    consistency_between(&a.items, &b.items)
}

/// Draws two masks and scores every item. The masks are returned so they
/// can serve as the contrastive views' knowledge-graph sides.
pub fn consistency_scores<F: Scalar>(
    store: &ParamStore<F>,
    kg: &KnowledgeGraph,
    p_k: f64,
    rng: &mut Rng,
) -> Result<(ConsistencyScores, [KgMask; 2])> {
    let masks = [sample_kg_mask(kg, p_k, rng)?, sample_kg_mask(kg, p_k, rng)?];
    Ok((consistency_with_masks(store, kg, &masks), masks))
}

/// Keep probability per interaction edge with the intermediate quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeDropProbs {
    /// Final probability that the edge is retained.
    pub keep: Vec<f64>,
    pub weight: Vec<f64>,
    pub truncated: Vec<f64>,
    pub mean_truncated: f64,
    pub weight_min: f64,
    pub weight_max: f64,
}

impl EdgeDropProbs {
    pub fn uniform(num_edges: usize, keep: f64) -> Self {
        EdgeDropProbs {
            keep: vec![keep; num_edges],
            weight: vec![1.0; num_edges],
            truncated: vec![1.0; num_edges],
            mean_truncated: 1.0,
            weight_min: 1.0,
            weight_max: 1.0,
        }
    }

    pub fn mean_keep(&self) -> f64 {
        self.keep.iter().sum::<f64>() / self.keep.len().max(1) as f64
    }
}

/// Maps item consistency to edge keep probabilities; `min`/`max` range over
/// edges.
pub fn edge_keep_probs(
    c: &ConsistencyScores,
    graph: &InteractionGraph,
    p_tau: f64,
    p_a: f64,
    invert_keep_prob: bool,
) -> Result<EdgeDropProbs> {
    if !(p_tau > 0.0 && p_tau <= 1.0) || !(p_a > 0.0 && p_a <= 1.0) {
        return Err(Error::invalid(format!("p_tau and p_a must lie in (0, 1], got {p_tau}, {p_a}")));
    }
    if graph.num_edges() == 0 {
        return Err(Error::invalid("interaction graph has no edges"));
    }
    if c.values.len() != graph.num_items() {
        return Err(Error::invalid("one consistency score per item required"));
    }
    let weight: Vec<f64> = graph.edges().iter().map(|&(_, i)| c.values[i].exp()).collect();
    let weight_min = weight.iter().cloned().fold(f64::INFINITY, f64::min);
    let weight_max = weight.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = weight_max - weight_min;
    let truncated: Vec<f64> = weight
        .iter()
        .map(|&w| {
            let norm = if span > 0.0 { (w - weight_min) / span } else { 1.0 };
            norm.max(p_tau)
        })
        .collect();
    let mean_truncated = truncated.iter().sum::<f64>() / truncated.len() as f64;
    let keep = truncated
        .iter()
        .map(|&p| {
            let p = (p_a * mean_truncated * p).clamp(0.0, 1.0);
            if invert_keep_prob {
                1.0 - p
            } else {
                p
            }
        })
        .collect();
    Ok(EdgeDropProbs {
        keep,
        weight,
        truncated,
        mean_truncated,
        weight_min,
        weight_max,
    })
}

/// Which interaction edges survive in one view.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UiMask {
    keep: Vec<bool>,
}

impl UiMask {
    pub fn all(len: usize) -> Self {
        UiMask { keep: vec![true; len] }
    }

    pub fn from_bools(keep: Vec<bool>) -> Self {
        UiMask { keep }
    }

    #[inline]
    pub fn keeps(&self, edge: usize) -> bool {
        self.keep[edge]
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    pub fn retained(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }
}

/// Independent Bernoulli draw per edge with the given keep probabilities.
pub fn sample_ui_mask(keep_probs: &[f64], rng: &mut Rng) -> UiMask {
    UiMask {
        keep: keep_probs.iter().map(|&p| rng.random::<f64>() < p).collect(),
    }
}

/// Model variant as far as augmentation is concerned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Consistency-guided edge dropout over masked KG views.
    Full,
    /// KG views are masked, but interaction edges are dropped uniformly at
    /// the same expected rate as the guided scheme.
    NoKga,
    /// No KG masking: views aggregate the full KG and all items count as
    /// fully consistent.
    NoKgc,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoKga => "no-kga",
            Variant::NoKgc => "no-kgc",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "no-kga" => Ok(Variant::NoKga),
            "no-kgc" => Ok(Variant::NoKgc),
            _ => Err(Error::invalid(format!("unknown variant `{s}` (full | no-kga | no-kgc)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentConfig {
    pub p_k: f64,
    pub p_tau: f64,
    pub p_a: f64,
    pub invert_keep_prob: bool,
    pub variant: Variant,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            p_k: 0.1,
            p_tau: 0.7,
            p_a: 0.7,
            invert_keep_prob: false,
            variant: Variant::Full,
        }
    }
}

/// Two correlated views `(KG mask, interaction mask)` and the consistency
/// scores that produced their interaction masks.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedViewPair {
    pub kg_masks: [KgMask; 2],
    pub ui_masks: [UiMask; 2],
    pub consistency: ConsistencyScores,
    pub probs: EdgeDropProbs,
}

pub fn make_view_pair<F: Scalar>(
    store: &ParamStore<F>,
    kg: &KnowledgeGraph,
    graph: &InteractionGraph,
    cfg: &AugmentConfig,
    rng: &mut Rng,
) -> Result<AugmentedViewPair> {
    let (consistency, kg_masks) = match cfg.variant {
        Variant::NoKgc => (
            ConsistencyScores::uniform(graph.num_items()),
            [KgMask::all(kg.len()), KgMask::all(kg.len())],
        ),
        Variant::Full | Variant::NoKga => consistency_scores(store, kg, cfg.p_k, rng)?,
    };
    let mut probs = edge_keep_probs(&consistency, graph, cfg.p_tau, cfg.p_a, cfg.invert_keep_prob)?;
    if cfg.variant == Variant::NoKga {
        probs = EdgeDropProbs::uniform(graph.num_edges(), probs.mean_keep());
    }
    let ui_masks = [sample_ui_mask(&probs.keep, rng), sample_ui_mask(&probs.keep, rng)];
    Ok(AugmentedViewPair {
        kg_masks,
        ui_masks,
        consistency,
        probs,
    })
}
