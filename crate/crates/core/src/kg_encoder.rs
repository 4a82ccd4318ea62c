//! Relation-aware attentive aggregation of knowledge-graph neighbours into
//! item embeddings, and the translational (TransE) objective trained in
//! alternation with the recommender.
//!
//! For item `i` with surviving neighbours `(e, r)`:
//!
//! ```text
//! score(e)  = LeakyReLU( x_r · W [x_e ‖ x_i] )
//! α(e)      = softmax over i's neighbours of score(e)
//! out_i     = x_i + Σ α(e) x_e
//! ```
//!
//! `x_r · W [x_e ‖ x_i]` is evaluated as `(Wᵀx_r) · [x_e ‖ x_i]`, so each
//! relation's projection is computed once per call and every triple costs
//! `O(d)`.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::augment::KgMask;
use crate::data::{KnowledgeGraph, Triple};
use crate::numeric::{axpy, dot, AdamState, Matrix, ParamStore, Rng, Tensor};
use crate::{Error, Result, Scalar};

/// Negative slope of the attention LeakyReLU.
pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttentionEntry<F> {
    pub entity: usize,
    pub relation: usize,
    pub alpha: F,
    /// Attention logit before the LeakyReLU.
    pub logit: F,
}

/// Attention weights per item over its surviving neighbours.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionRecord<F> {
    ptr: Vec<usize>,
    entries: Vec<AttentionEntry<F>>,
}

impl<F: Scalar> AttentionRecord<F> {
    pub fn item(&self, i: usize) -> &[AttentionEntry<F>] {
        &self.entries[self.ptr[i]..self.ptr[i + 1]]
    }

    pub fn num_items(&self) -> usize {
        self.ptr.len() - 1
    }
}

/// Output of [`aggregate_items`]; kept for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregation<F> {
    /// `num_items x d` knowledge-aware item embeddings.
    pub items: Matrix<F>,
    pub attention: AttentionRecord<F>,
}

#[inline]
fn leaky<F: Scalar>(x: F) -> F {
    if x > F::zero() {
        x
    } else {
        x * F::of(LEAKY_SLOPE)
    }
}

/// `Wᵀ x_r` for every relation: `num_relations x 2d`.
fn relation_projections<F: Scalar>(relations: &Matrix<F>, attention: &Matrix<F>) -> Matrix<F> {
    let mut proj = Matrix::zeros(relations.rows(), attention.cols());
    for r in 0..relations.rows() {
        let xr = relations.row(r);
        let out = proj.row_mut(r);
        for (j, &w) in xr.iter().enumerate() {
            axpy(w, attention.row(j), out);
        }
    }
    proj
}

/// Aggregates every item's neighbours retained by `mask` (all of them when
/// `mask` is `None`). Items without surviving neighbours pass through
/// unchanged.
pub fn aggregate_items<F: Scalar>(store: &ParamStore<F>, kg: &KnowledgeGraph, mask: Option<&KgMask>) -> Aggregation<F> {
    let d = store.dim();
    let ent = store.entities();
    let proj = relation_projections(store.relations(), store.attention());
    let mut items = Matrix::zeros(kg.num_items(), d);
    let mut ptr = Vec::with_capacity(kg.num_items() + 1);
    ptr.push(0);
    let mut entries = Vec::with_capacity(kg.len());

    for i in 0..kg.num_items() {
        let xi = ent.row(i);
        let start = entries.len();
        let mut max = F::neg_infinity();
        for &(e, r, idx) in kg.item_neighbors(i) {
            if mask.is_some_and(|m| !m.keeps(idx)) {
                continue;
            }
            let v = proj.row(r);
            let logit = dot(&v[..d], ent.row(e)) + dot(&v[d..], xi);
            let s = leaky(logit);
            max = max.max(s);
            entries.push(AttentionEntry {
                entity: e,
                relation: r,
                alpha: s,
                logit,
            });
        }
        let out = items.row_mut(i);
        out.copy_from_slice(xi);
        let nbrs = &mut entries[start..];
        if !nbrs.is_empty() {
            let mut total = F::zero();
            for n in nbrs.iter_mut() {
                n.alpha = (n.alpha - max).exp();
                total += n.alpha;
            }
            for n in nbrs.iter_mut() {
                n.alpha /= total;
                axpy(n.alpha, ent.row(n.entity), out);
            }
        }
        ptr.push(entries.len());
    }
    Aggregation {
        items,
        attention: AttentionRecord { ptr, entries },
    }
}

/// Adds `∂L/∂θ` into the store given `grad_items = ∂L/∂out`.
pub fn aggregate_backward<F: Scalar>(store: &mut ParamStore<F>, agg: &Aggregation<F>, grad_items: &Matrix<F>) {
    let d = store.dim();
    let slope = F::of(LEAKY_SLOPE);
    let (params, grads) = store.params_and_grads();
    let ent = &params[Tensor::Entity as usize];
    let rel = &params[Tensor::Relation as usize];
    let att = &params[Tensor::Attention as usize];
    let proj = relation_projections(rel, att);
    let mut grad_proj = Matrix::zeros(rel.rows(), 2 * d);
    let g_ent = &mut grads[Tensor::Entity as usize];
    let mut touched = vec![false; rel.rows()];
    let mut dalpha = Vec::new();

    for i in 0..agg.attention.num_items() {
        let g = grad_items.row(i);
        if g.iter().all(|x| *x == F::zero()) {
            continue;
        }
        axpy(F::one(), g, g_ent.row_mut(i));
        let nbrs = agg.attention.item(i);
        if nbrs.is_empty() {
            continue;
        }
        dalpha.clear();
        dalpha.extend(nbrs.iter().map(|n| dot(g, ent.row(n.entity))));
        let mean: F = nbrs.iter().zip(&dalpha).map(|(n, &da)| n.alpha * da).sum();
        for (n, &da) in nbrs.iter().zip(&dalpha) {
            axpy(n.alpha, g, g_ent.row_mut(n.entity));
            let ds = n.alpha * (da - mean);
            let dlogit = if n.logit > F::zero() { ds } else { ds * slope };
            if dlogit == F::zero() {
                continue;
            }
            let v = proj.row(n.relation);
            axpy(dlogit, &v[..d], g_ent.row_mut(n.entity));
            axpy(dlogit, &v[d..], g_ent.row_mut(i));
            let gv = grad_proj.row_mut(n.relation);
            axpy(dlogit, ent.row(n.entity), &mut gv[..d]);
            axpy(dlogit, ent.row(i), &mut gv[d..]);
            touched[n.relation] = true;
        }
    }

    // proj_r = Wᵀ x_r  =>  ∂x_r = W ∂proj_r,  ∂W = x_r ⊗ ∂proj_r
    for r in (0..rel.rows()).filter(|&r| touched[r]) {
        let gv = grad_proj.row(r);
        let g_rel = grads[Tensor::Relation as usize].row_mut(r);
        for j in 0..d {
            g_rel[j] += dot(att.row(j), gv);
        }
        let xr = rel.row(r);
        let g_att = &mut grads[Tensor::Attention as usize];
        for j in 0..d {
            axpy(xr[j], gv, g_att.row_mut(j));
        }
    }
}

/// A training triple with its corrupted tail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransESample {
    pub triple: Triple,
    pub negative_tail: usize,
}

/// Replaces each tail by a uniformly drawn entity. Accidental true triples
/// are not filtered.
pub fn sample_negative_tails(batch: &[Triple], num_entities: usize, rng: &mut Rng) -> Vec<TransESample> {
    batch
        .iter()
        .map(|&triple| TransESample {
            triple,
            negative_tail: rng.random_range(0..num_entities),
        })
        .collect()
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn l1_distance<F: Scalar>(h: &[F], r: &[F], t: &[F]) -> f64 {
    h.iter()
        .zip(r)
        .zip(t)
        .map(|((&h, &r), &t)| (h + r - t).abs().f64())
        .sum()
}

#[inline]
fn sign<F: Scalar>(x: F) -> F {
    if x > F::zero() {
        F::one()
    } else if x < F::zero() {
        -F::one()
    } else {
        F::zero()
    }
}

/// Mean of `−ln σ(f(h,r,t′) − f(h,r,t))` over the batch, with
/// `f = ‖x_h + x_r − x_t‖₁`. Gradients are added into the store; the L1
/// subgradient at zero is zero.
pub fn transe_loss<F: Scalar>(store: &mut ParamStore<F>, batch: &[TransESample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid("TransE batch is empty"));
    }
    let vocab = store.vocab();
    if vocab.num_entities == 0 {
        return Err(Error::invalid("entity vocabulary is empty"));
    }
    let d = store.dim();
    let scale = 1.0 / batch.len() as f64;
    let (params, grads) = store.params_and_grads();
    let ent = &params[Tensor::Entity as usize];
    let rel = &params[Tensor::Relation as usize];
    let mut total = 0.0;
    let mut diff_pos = vec![F::zero(); d];
    let mut diff_neg = vec![F::zero(); d];

    for s in batch {
        let Triple { head, relation, tail } = s.triple;
        if head >= vocab.num_entities
            || tail >= vocab.num_entities
            || s.negative_tail >= vocab.num_entities
            || relation >= vocab.num_relations
        {
            return Err(Error::invalid(format!("TransE sample {s:?} out of vocabulary")));
        }
        let (xh, xr) = (ent.row(head), rel.row(relation));
        let pos = l1_distance(xh, xr, ent.row(tail));
        let neg = l1_distance(xh, xr, ent.row(s.negative_tail));
        total += softplus(pos - neg);

        // ∂/∂pos = σ(pos − neg),  ∂/∂neg = −σ(pos − neg)
        let c = F::of(sigmoid(pos - neg) * scale);
        for k in 0..d {
            diff_pos[k] = sign(xh[k] + xr[k] - ent.row(tail)[k]);
            diff_neg[k] = sign(xh[k] + xr[k] - ent.row(s.negative_tail)[k]);
        }
        let g_ent = &mut grads[Tensor::Entity as usize];
        for k in 0..d {
            let dh = c * (diff_pos[k] - diff_neg[k]);
            g_ent.row_mut(head)[k] += dh;
            g_ent.row_mut(tail)[k] -= c * diff_pos[k];
            g_ent.row_mut(s.negative_tail)[k] += c * diff_neg[k];
        }
        let g_rel = grads[Tensor::Relation as usize].row_mut(relation);
        for k in 0..d {
            g_rel[k] += c * (diff_pos[k] - diff_neg[k]);
        }
    }
    Ok(total * scale)
}

/// One shuffled pass over all triples in mini-batches, each followed by an
/// optimizer step. Returns the mean per-triple loss (0 for an empty KG).
pub fn alternate_epoch<F: Scalar>(
    store: &mut ParamStore<F>,
    optimizer: &mut AdamState<F>,
    kg: &KnowledgeGraph,
    batch_size: usize,
    rng: &mut Rng,
) -> Result<f64> {
    if kg.is_empty() {
        return Ok(0.0);
    }
    let batch_size = batch_size.max(1);
    let mut order: Vec<Triple> = kg.triples().to_vec();
    order.shuffle(rng);
    let mut total = 0.0;
    for chunk in order.chunks(batch_size) {
        let samples = sample_negative_tails(chunk, kg.num_entities(), rng);
        store.zero_grads();
        total += transe_loss(store, &samples)? * chunk.len() as f64;
        optimizer.step(store)?;
    }
    store.zero_grads();
    Ok(total / kg.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{init_params, rng_from_seed, AdamConfig, VocabSizes};

    fn store_from(entities: Vec<Vec<f64>>, relations: Vec<Vec<f64>>, attention: Vec<Vec<f64>>) -> ParamStore<f64> {
        let d = entities[0].len();
        ParamStore::from_tensors(
            Matrix::zeros(1, d),
            Matrix::from_rows(&entities),
            Matrix::from_rows(&relations),
            Matrix::from_rows(&attention),
        )
        .unwrap()
    }

    #[test]
    fn singleton_neighbourhood() {
        let s = store_from(vec![vec![1.0, 2.0], vec![0.5, -1.0]], vec![vec![0.3, 0.7]], vec![vec![1.0, 0.0, 0.5, 0.1], vec![0.2, 0.3, 0.0, 1.0]]);
        let (kg, _) = KnowledgeGraph::new(1, 2, 1, vec![Triple::new(0, 0, 1)]);
        let agg = aggregate_items(&s, &kg, None);
        assert_eq!(agg.attention.item(0)[0].alpha, 1.0);
        assert_eq!(agg.items.row(0), &[1.5, 1.0]);
    }

    #[test]
    fn isolated_item_passes_through() {
        let s = store_from(vec![vec![1.0, 2.0], vec![3.0, 4.0]], vec![vec![1.0, 1.0]], vec![vec![1.0; 4], vec![1.0; 4]]);
        let kg = KnowledgeGraph::empty(2);
        let agg = aggregate_items(&s, &kg, None);
        assert_eq!(agg.items.row(1), &[3.0, 4.0]);
        assert!(agg.attention.item(0).is_empty());
    }

    #[test]
    fn equal_scores_split_evenly() {
        // x_i = (1,0), e1 = (0,1), e2 = (1,1); r = (1,0), W row 0 = [0,1 | 1,0]
        // => logit = x_e[1] + x_i[0] = 2 for both neighbours
        let s = store_from(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            vec![vec![1.0, 0.0]],
            vec![vec![0.0, 1.0, 1.0, 0.0], vec![5.0, -3.0, 2.0, 7.0]],
        );
        let (kg, _) = KnowledgeGraph::new(1, 3, 1, vec![Triple::new(0, 0, 1), Triple::new(0, 0, 2)]);
        let agg = aggregate_items(&s, &kg, None);
        let rec = agg.attention.item(0);
        assert_eq!(rec[0].logit, 2.0);
        assert_eq!(rec[1].logit, 2.0);
        assert_eq!(rec[0].alpha, 0.5);
        assert_eq!(agg.items.row(0), &[1.5, 1.0]);
    }

    #[test]
    fn negative_logits_use_leaky_slope() {
        assert_eq!(leaky(-1.0f64), -0.2);
        assert_eq!(leaky(3.0f64), 3.0);
    }

    fn one_dim_store(values: &[f64], relation: f64) -> ParamStore<f64> {
        ParamStore::from_tensors(
            Matrix::zeros(1, 1),
            Matrix::from_vec(values.len(), 1, values.to_vec()),
            Matrix::from_vec(1, 1, vec![relation]),
            Matrix::zeros(1, 2),
        )
        .unwrap()
    }

    #[test]
    fn transe_equal_distances_give_ln2() {
        let mut s = one_dim_store(&[0.0, 1.0, 1.0], 0.0);
        let b = [TransESample {
            triple: Triple::new(0, 0, 1),
            negative_tail: 2,
        }];
        let l = transe_loss(&mut s, &b).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn transe_hand_value() {
        // x_h = 0, x_r = 1, x_t = 1, x_t' = 3: f(pos) = 0, f(neg) = 2
        let mut s = one_dim_store(&[0.0, 1.0, 3.0], 1.0);
        let b = [TransESample {
            triple: Triple::new(0, 0, 1),
            negative_tail: 2,
        }];
        let l = transe_loss(&mut s, &b).unwrap();
        let expected = -(1.0 / (1.0 + (-2.0f64).exp())).ln();
        assert!((l - expected).abs() < 1e-15);
        assert!((l - 0.1269).abs() < 1e-4);
    }

    #[test]
    fn transe_far_negative_vanishes() {
        let mut s = one_dim_store(&[0.0, 1.0, 80.0], 1.0);
        let b = [TransESample {
            triple: Triple::new(0, 0, 1),
            negative_tail: 2,
        }];
        assert!(transe_loss(&mut s, &b).unwrap() < 1e-30);
    }

    #[test]
    fn transe_rejects_empty_batch() {
        let mut s = one_dim_store(&[0.0], 0.0);
        assert!(transe_loss(&mut s, &[]).is_err());
    }

    #[test]
    fn empty_kg_epoch_is_noop() {
        let vocab = VocabSizes {
            num_users: 2,
            num_entities: 3,
            num_relations: 1,
        };
        let mut s: ParamStore<f64> = init_params(vocab, 4, &mut rng_from_seed(0)).unwrap();
        let before = s.clone();
        let mut opt = AdamState::new(&s, AdamConfig::default());
        let l = alternate_epoch(&mut s, &mut opt, &KnowledgeGraph::empty(3), 8, &mut rng_from_seed(1)).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(s, before);
    }
}
