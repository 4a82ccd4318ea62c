//! Training objectives: InfoNCE between two graph views, BPR over the full
//! graph, the weighted joint objective, and the contrastive gradient curve.
//!
//! Every loss returns its value in `f64` and accumulates gradients with
//! respect to its inputs; [`joint_loss`] chains those through propagation
//! and knowledge-graph aggregation into the parameter store.

use crate::augment::{AugmentedViewPair, KgMask};
use crate::cf_encoder::NormalizedAdjacency;
use crate::data::{InteractionGraph, KnowledgeGraph};
use crate::kg_encoder::{aggregate_backward, aggregate_items, sigmoid, Aggregation};
use crate::numeric::{dot, Matrix, ParamStore, Tensor};
use crate::{Error, Result, Scalar};

/// Which nodes serve as negatives for an anchor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativeScope {
    /// Other nodes of the same batch.
    InBatch,
    /// Every node of the pool's type.
    Full,
}

impl NegativeScope {
    pub fn name(self) -> &'static str {
        match self {
            NegativeScope::InBatch => "in-batch",
            NegativeScope::Full => "full",
        }
    }
}

impl std::str::FromStr for NegativeScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in-batch" => Ok(NegativeScope::InBatch),
            "full" => Ok(NegativeScope::Full),
            _ => Err(Error::invalid(format!("unknown negative scope `{s}` (in-batch | full)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfoNceConfig {
    pub tau: f64,
    pub scope: NegativeScope,
    pub include_positive_in_denominator: bool,
}

impl Default for InfoNceConfig {
    fn default() -> Self {
        InfoNceConfig {
            tau: 0.2,
            scope: NegativeScope::InBatch,
            include_positive_in_denominator: false,
        }
    }
}

/// Mean InfoNCE over a batch and its gradients with respect to both views.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoNceOutput<F> {
    pub loss: f64,
    pub grad_view1: Matrix<F>,
    pub grad_view2: Matrix<F>,
}

/// Rows of `m` scaled to unit length (zero rows stay zero), with their norms.
fn unit_rows<F: Scalar>(m: &Matrix<F>, ids: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let d = m.cols();
    let mut out = vec![0.0; ids.len() * d];
    let mut norms = Vec::with_capacity(ids.len());
    for (k, &n) in ids.iter().enumerate() {
        let row = m.row(n);
        let norm = row.iter().map(|x| x.f64() * x.f64()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (o, x) in out[k * d..(k + 1) * d].iter_mut().zip(row) {
                *o = x.f64() / norm;
            }
        }
        norms.push(norm);
    }
    (out, norms)
}

/// `c = alpha · A·B` for row-major output `c` (`m x n`); operands are given
/// as `(data, row stride, column stride)`.
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: (&[f64], usize, usize),
    b: (&[f64], usize, usize),
    c: (&mut [f64], usize),
) {
    if m == 0 || n == 0 {
        return;
    }
    debug_assert!(c.0.len() >= m * c.1);
    // SAFETY: the strides describe in-bounds views of the slices (callers
    // pass contiguous row-major or transposed row-major buffers of the
    // stated shapes) and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.0.as_ptr(),
            a.1 as isize,
            a.2 as isize,
            b.0.as_ptr(),
            b.1 as isize,
            b.2 as isize,
            0.0,
            c.0.as_mut_ptr(),
            c.1 as isize,
            1,
        );
    }
}

/// Pulls a gradient on a unit vector back to the unnormalised row.
fn unnormalize_into<F: Scalar>(grad_unit: &[f64], unit: &[f64], norm: f64, scale: f64, out: &mut [F]) {
    if norm == 0.0 {
        return;
    }
    let proj: f64 = grad_unit.iter().zip(unit).map(|(g, u)| g * u).sum();
    for ((o, g), u) in out.iter_mut().zip(grad_unit).zip(unit) {
        *o += F::of(scale * (g - proj * u) / norm);
    }
}

/// Sums per-anchor InfoNCE terms over `anchors`, drawing negatives from
/// `pool` (which must contain every anchor), and adds `scale ×` their
/// gradients into `grad1` / `grad2`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn infonce_accumulate<F: Scalar>(
    view1: &Matrix<F>,
    view2: &Matrix<F>,
    anchors: &[usize],
    pool: &[usize],
    cfg: &InfoNceConfig,
    scale: f64,
    grad1: &mut Matrix<F>,
    grad2: &mut Matrix<F>,
) -> Result<f64> {
    if !(cfg.tau > 0.0) {
        return Err(Error::invalid(format!("temperature must be positive, got {}", cfg.tau)));
    }
    let denominator_size = if cfg.include_positive_in_denominator { pool.len() } else { pool.len().saturating_sub(1) };
    if denominator_size == 0 {
        return Err(Error::invalid("InfoNCE needs at least two nodes in the negative pool"));
    }
    let mut sorted_pool = pool.to_vec();
    sorted_pool.sort_unstable();
    if sorted_pool.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("InfoNCE node ids must be distinct"));
    }
    let n_rows = view1.rows().min(view2.rows());
    if sorted_pool.last().is_some_and(|&m| m >= n_rows) || anchors.iter().any(|&n| n >= n_rows) {
        return Err(Error::invalid("InfoNCE node id outside the views"));
    }
    let mut slot = vec![usize::MAX; n_rows];
    for (k, &m) in pool.iter().enumerate() {
        slot[m] = k;
    }
    let positives: Vec<usize> = anchors
        .iter()
        .map(|&n| match slot[n] {
            usize::MAX => Err(Error::invalid(format!("anchor {n} missing from the negative pool"))),
            k => Ok(k),
        })
        .collect::<Result<_>>()?;

    let d = view1.cols();
    let inv_tau = 1.0 / cfg.tau;
    let (a, a_norm) = unit_rows(view1, anchors);
    let (b, b_norm) = unit_rows(view2, pool);
    let (k_len, m_len) = (anchors.len(), pool.len());

    // logits[k][m] = a_k · b_m / τ
    let mut logits = vec![0.0; k_len * m_len];
    gemm(k_len, d, m_len, inv_tau, (&a, d, 1), (&b, 1, d), (&mut logits, m_len));

    // Overwrite each logit row with dL/dlogit.
    let mut total = 0.0;
    for (k, &pos) in positives.iter().enumerate() {
        let row = &mut logits[k * m_len..(k + 1) * m_len];
        let in_denominator = |m: usize| cfg.include_positive_in_denominator || m != pos;
        let max = (0..m_len).filter(|&m| in_denominator(m)).map(|m| row[m]).fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = (0..m_len).filter(|&m| in_denominator(m)).map(|m| (row[m] - max).exp()).sum();
        let lse = max + sum.ln();
        total += lse - row[pos];
        for (m, x) in row.iter_mut().enumerate() {
            let mut coef = if in_denominator(m) { (*x - lse).exp() } else { 0.0 };
            if m == pos {
                coef -= 1.0;
            }
            *x = coef * inv_tau;
        }
    }
    let mut grad_a = vec![0.0; a.len()];
    let mut grad_b = vec![0.0; b.len()];
    gemm(k_len, m_len, d, 1.0, (&logits, m_len, 1), (&b, d, 1), (&mut grad_a, d));
    gemm(m_len, k_len, d, 1.0, (&logits, 1, m_len), (&a, d, 1), (&mut grad_b, d));

    for (k, &n) in anchors.iter().enumerate() {
        let r = k * d..(k + 1) * d;
        unnormalize_into(&grad_a[r.clone()], &a[r], a_norm[k], scale, grad1.row_mut(n));
    }
    for (k, &m) in pool.iter().enumerate() {
        let r = k * d..(k + 1) * d;
        unnormalize_into(&grad_b[r.clone()], &b[r], b_norm[k], scale, grad2.row_mut(m));
    }
    Ok(total)
}

/// InfoNCE between two views over one node space. Anchors are `batch`;
/// negatives come from the batch or from every row, depending on the scope.
pub fn infonce<F: Scalar>(
    view1: &Matrix<F>,
    view2: &Matrix<F>,
    batch: &[usize],
    cfg: &InfoNceConfig,
) -> Result<InfoNceOutput<F>> {
    if view1.shape() != view2.shape() {
        return Err(Error::invalid("InfoNCE views must have the same shape"));
    }
    if batch.is_empty() {
        return Err(Error::invalid("InfoNCE batch is empty"));
    }
    let all: Vec<usize>;
    let pool = match cfg.scope {
        NegativeScope::InBatch => batch,
        NegativeScope::Full => {
            all = (0..view1.rows()).collect();
            &all
        }
    };
    let mut grad_view1 = Matrix::zeros(view1.rows(), view1.cols());
    let mut grad_view2 = Matrix::zeros(view2.rows(), view2.cols());
    let scale = 1.0 / batch.len() as f64;
    let mut sorted = batch.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("InfoNCE node ids must be distinct"));
    }
    let total = infonce_accumulate(view1, view2, batch, pool, cfg, scale, &mut grad_view1, &mut grad_view2)?;
    Ok(InfoNceOutput {
        loss: total * scale,
        grad_view1,
        grad_view2,
    })
}

/// One BPR training triple `(user, positive item, negative item)`.
pub type BprTriple = (usize, usize, usize);

#[derive(Clone, Debug, PartialEq)]
pub struct BprOutput<F> {
    pub loss: f64,
    pub grad_users: Matrix<F>,
    pub grad_items: Matrix<F>,
}

fn validate_triples(graph: &InteractionGraph, triples: &[BprTriple]) -> Result<()> {
    for &(u, p, n) in triples {
        if u >= graph.num_users() || p >= graph.num_items() || n >= graph.num_items() {
            return Err(Error::invalid(format!("BPR triple ({u}, {p}, {n}) out of range")));
        }
        if !graph.has_edge(u, p) {
            return Err(Error::invalid(format!("BPR positive {p} is not a training item of user {u}")));
        }
        if graph.has_edge(u, n) {
            return Err(Error::invalid(format!("BPR negative {n} is a training item of user {u}")));
        }
    }
    Ok(())
}

pub(crate) fn bpr_accumulate<F: Scalar>(
    users: &Matrix<F>,
    items: &Matrix<F>,
    triples: &[BprTriple],
    scale: f64,
    grad_users: &mut Matrix<F>,
    grad_items: &mut Matrix<F>,
) -> f64 {
    let d = users.cols();
    let mut total = 0.0;
    let mut diff = vec![F::zero(); d];
    for &(u, p, n) in triples {
        let xu = users.row(u);
        let (xp, xn) = (items.row(p), items.row(n));
        let margin = (dot(xu, xp) - dot(xu, xn)).f64();
        total += -log_sigmoid(margin);
        let coef = F::of(-scale * sigmoid(-margin));
        for j in 0..d {
            diff[j] = xp[j] - xn[j];
        }
        let gu = grad_users.row_mut(u);
        for j in 0..d {
            gu[j] += coef * diff[j];
        }
        let xu: Vec<F> = xu.to_vec();
        let gp = grad_items.row_mut(p);
        for j in 0..d {
            gp[j] += coef * xu[j];
        }
        let gn = grad_items.row_mut(n);
        for j in 0..d {
            gn[j] -= coef * xu[j];
        }
    }
    total
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Mean `−ln σ(ŷ(u, pos) − ŷ(u, neg))` over `triples`, scored on the given
/// final embeddings. Triples are checked against `graph`.
pub fn bpr<F: Scalar>(
    user_final: &Matrix<F>,
    item_final: &Matrix<F>,
    graph: &InteractionGraph,
    triples: &[BprTriple],
) -> Result<BprOutput<F>> {
    if triples.is_empty() {
        return Err(Error::invalid("BPR batch is empty"));
    }
    if user_final.rows() != graph.num_users() || item_final.rows() != graph.num_items() {
        return Err(Error::invalid("BPR embeddings do not match the interaction graph"));
    }
    validate_triples(graph, triples)?;
    let mut grad_users = Matrix::zeros(user_final.rows(), user_final.cols());
    let mut grad_items = Matrix::zeros(item_final.rows(), item_final.cols());
    let scale = 1.0 / triples.len() as f64;
    let total = bpr_accumulate(user_final, item_final, triples, scale, &mut grad_users, &mut grad_items);
    Ok(BprOutput {
        loss: total * scale,
        grad_users,
        grad_items,
    })
}

/// Loss components of one batch (or their epoch means).
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub bpr: f64,
    pub contrastive: f64,
    pub transe: f64,
    pub l2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau: f64,
    pub layers: usize,
    pub scope: NegativeScope,
    pub include_positive_in_denominator: bool,
    pub mixed_negatives: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda1: 0.1,
            lambda2: 1e-4,
            tau: 0.2,
            layers: 3,
            scope: NegativeScope::InBatch,
            include_positive_in_denominator: false,
            mixed_negatives: false,
        }
    }
}

impl LossConfig {
    fn infonce(&self) -> InfoNceConfig {
        InfoNceConfig {
            tau: self.tau,
            scope: self.scope,
            include_positive_in_denominator: self.include_positive_in_denominator,
        }
    }
}

/// Graph operators fixed for an epoch: the full training graph and the two
/// contrastive views. A view's knowledge-graph mask is `None` when it keeps
/// every triple, in which case it shares the main aggregation.
#[derive(Clone, Debug)]
pub struct PreparedViews<F> {
    pub full: NormalizedAdjacency<F>,
    pub views: [NormalizedAdjacency<F>; 2],
    pub kg_masks: [Option<KgMask>; 2],
}

impl<F: Scalar> PreparedViews<F> {
    pub fn new(graph: &InteractionGraph, pair: &AugmentedViewPair) -> Self {
        Self::with_full(NormalizedAdjacency::new(graph, None), graph, pair)
    }

    /// Reuses an already built full-graph operator.
    pub fn with_full(full: NormalizedAdjacency<F>, graph: &InteractionGraph, pair: &AugmentedViewPair) -> Self {
        let mask = |m: &KgMask| (m.retained() < m.len()).then(|| m.clone());
        PreparedViews {
            full,
            views: [
                NormalizedAdjacency::new(graph, Some(&pair.ui_masks[0])),
                NormalizedAdjacency::new(graph, Some(&pair.ui_masks[1])),
            ],
            kg_masks: [mask(&pair.kg_masks[0]), mask(&pair.kg_masks[1])],
        }
    }
}

fn sorted_unique(it: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = it.collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Stacks user rows above item rows.
fn stack<F: Scalar>(users: &Matrix<F>, items: &Matrix<F>) -> Matrix<F> {
    let mut data = Vec::with_capacity(users.as_slice().len() + items.as_slice().len());
    data.extend_from_slice(users.as_slice());
    data.extend_from_slice(items.as_slice());
    Matrix::from_vec(users.rows() + items.rows(), users.cols(), data)
}

fn unstack<F: Scalar>(m: &Matrix<F>, num_users: usize) -> (Matrix<F>, Matrix<F>) {
    let d = m.cols();
    let (u, i) = m.as_slice().split_at(num_users * d);
    (
        Matrix::from_vec(num_users, d, u.to_vec()),
        Matrix::from_vec(m.rows() - num_users, d, i.to_vec()),
    )
}

struct ViewFinals<F> {
    users: Matrix<F>,
    items: Matrix<F>,
}

/// Contrastive term over batch users and positive items. Returns the mean
/// over anchors (0 when no pool has enough nodes) and gradients with respect
/// to each view's final embeddings.
fn contrastive_term<F: Scalar>(
    finals: &[ViewFinals<F>; 2],
    batch: &[BprTriple],
    cfg: &LossConfig,
    weight: f64,
) -> Result<(f64, [ViewFinals<F>; 2])> {
    let nu = finals[0].users.rows();
    let ni = finals[0].items.rows();
    let d = finals[0].users.cols();
    let users = sorted_unique(batch.iter().map(|t| t.0));
    let items = sorted_unique(batch.iter().map(|t| t.1));
    let nce = cfg.infonce();
    let min_pool = if cfg.include_positive_in_denominator { 1 } else { 2 };

    if cfg.mixed_negatives {
        let v1 = stack(&finals[0].users, &finals[0].items);
        let v2 = stack(&finals[1].users, &finals[1].items);
        let anchors: Vec<usize> = users.iter().copied().chain(items.iter().map(|&i| nu + i)).collect();
        let all: Vec<usize>;
        let pool: &[usize] = match cfg.scope {
            NegativeScope::InBatch => &anchors,
            NegativeScope::Full => {
                all = (0..nu + ni).collect();
                &all
            }
        };
        let mut g1 = Matrix::zeros(nu + ni, d);
        let mut g2 = Matrix::zeros(nu + ni, d);
        let mut loss = 0.0;
        if pool.len() >= min_pool {
            let scale = weight / anchors.len() as f64;
            loss = infonce_accumulate(&v1, &v2, &anchors, pool, &nce, scale, &mut g1, &mut g2)? / anchors.len() as f64;
        }
        let (g1u, g1i) = unstack(&g1, nu);
        let (g2u, g2i) = unstack(&g2, nu);
        return Ok((
            loss,
            [
                ViewFinals { users: g1u, items: g1i },
                ViewFinals { users: g2u, items: g2i },
            ],
        ));
    }

    let mut grads = [
        ViewFinals {
            users: Matrix::zeros(nu, d),
            items: Matrix::zeros(ni, d),
        },
        ViewFinals {
            users: Matrix::zeros(nu, d),
            items: Matrix::zeros(ni, d),
        },
    ];
    let full_users: Vec<usize>;
    let full_items: Vec<usize>;
    let (user_pool, item_pool): (&[usize], &[usize]) = match cfg.scope {
        NegativeScope::InBatch => (&users, &items),
        NegativeScope::Full => {
            full_users = (0..nu).collect();
            full_items = (0..ni).collect();
            (&full_users, &full_items)
        }
    };
    let use_users = user_pool.len() >= min_pool;
    let use_items = item_pool.len() >= min_pool;
    let count = if use_users { users.len() } else { 0 } + if use_items { items.len() } else { 0 };
    if count == 0 {
        return Ok((0.0, grads));
    }
    let scale = weight / count as f64;
    let mut total = 0.0;
    let [g1, g2] = &mut grads;
    if use_users {
        total += infonce_accumulate(
            &finals[0].users,
            &finals[1].users,
            &users,
            user_pool,
            &nce,
            scale,
            &mut g1.users,
            &mut g2.users,
        )?;
    }
    if use_items {
        total += infonce_accumulate(
            &finals[0].items,
            &finals[1].items,
            &items,
            item_pool,
            &nce,
            scale,
            &mut g1.items,
            &mut g2.items,
        )?;
    }
    Ok((total / count as f64, grads))
}

/// Joint objective `bpr + λ1·contrastive + λ2·l2` for one batch.
///
/// BPR scores come from the full graph with the unmasked knowledge graph;
/// the contrastive term compares the two prepared views. `l2` is the summed
/// squared norm of the user and item parameter rows the batch touches.
/// Gradients are added to the store's gradient buffers. The contrastive
/// term is skipped (and reported as 0) when `λ1 = 0`.
pub fn joint_loss<F: Scalar>(
    store: &mut ParamStore<F>,
    graph: &InteractionGraph,
    kg: &KnowledgeGraph,
    prepared: &PreparedViews<F>,
    batch: &[BprTriple],
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    if batch.is_empty() {
        return Err(Error::invalid("joint loss batch is empty"));
    }
    if !(cfg.tau > 0.0) || cfg.layers == 0 {
        return Err(Error::invalid("joint loss needs tau > 0 and at least one layer"));
    }
    validate_triples(graph, batch)?;
    let layers = cfg.layers;
    let nu = graph.num_users();
    let ni = graph.num_items();
    let d = store.dim();

    let main_agg = aggregate_items(store, kg, None);
    let (uf, itf) = prepared.full.propagate_final(store.users(), &main_agg.items, layers)?;
    let mut g_uf = Matrix::zeros(nu, d);
    let mut g_if = Matrix::zeros(ni, d);
    let scale = 1.0 / batch.len() as f64;
    let bpr = bpr_accumulate(&uf, &itf, batch, scale, &mut g_uf, &mut g_if) * scale;

    let (dense_u, dense_i) = prepared.full.propagate_final(&g_uf, &g_if, layers)?;
    let mut user_grad = dense_u;
    let mut main_item_grad = dense_i;
    let mut view_aggs: Vec<(Aggregation<F>, Matrix<F>)> = Vec::new();

    let mut contrastive = 0.0;
    if cfg.lambda1 != 0.0 {
        let mut finals = Vec::with_capacity(2);
        let mut aggs: [Option<Aggregation<F>>; 2] = [None, None];
        for v in 0..2 {
            if let Some(mask) = &prepared.kg_masks[v] {
                aggs[v] = Some(aggregate_items(store, kg, Some(mask)));
            }
            let items0 = aggs[v].as_ref().map_or(&main_agg.items, |a| &a.items);
            let (u, i) = prepared.views[v].propagate_final(store.users(), items0, layers)?;
            finals.push(ViewFinals { users: u, items: i });
        }
        let finals: [ViewFinals<F>; 2] = finals.try_into().ok().expect("two views");
        let (value, grads) = contrastive_term(&finals, batch, cfg, cfg.lambda1)?;
        contrastive = value;
        for (v, (g, agg)) in grads.iter().zip(aggs).enumerate() {
            let (du, di) = prepared.views[v].propagate_final(&g.users, &g.items, layers)?;
            user_grad.add_scaled(F::one(), &du);
            match agg {
                Some(agg) => view_aggs.push((agg, di)),
                None => main_item_grad.add_scaled(F::one(), &di),
            }
        }
    }

    store.grad_mut(Tensor::User).add_scaled(F::one(), &user_grad);
    aggregate_backward(store, &main_agg, &main_item_grad);
    for (agg, di) in &view_aggs {
        aggregate_backward(store, agg, di);
    }

    let mut l2 = 0.0;
    let two_l2 = F::of(2.0 * cfg.lambda2);
    let (params, grads) = store.params_and_grads();
    for u in sorted_unique(batch.iter().map(|t| t.0)) {
        let row = params[Tensor::User as usize].row(u);
        l2 += row.iter().map(|x| x.f64() * x.f64()).sum::<f64>();
        if cfg.lambda2 != 0.0 {
            for (g, &x) in grads[Tensor::User as usize].row_mut(u).iter_mut().zip(row) {
                *g += two_l2 * x;
            }
        }
    }
    for i in sorted_unique(batch.iter().flat_map(|t| [t.1, t.2])) {
        let row = params[Tensor::Entity as usize].row(i);
        l2 += row.iter().map(|x| x.f64() * x.f64()).sum::<f64>();
        if cfg.lambda2 != 0.0 {
            for (g, &x) in grads[Tensor::Entity as usize].row_mut(i).iter_mut().zip(row) {
                *g += two_l2 * x;
            }
        }
    }

    Ok(LossBreakdown {
        total: bpr + cfg.lambda1 * contrastive + cfg.lambda2 * l2,
        bpr,
        contrastive,
        transe: 0.0,
        l2,
        lambda1: cfg.lambda1,
        lambda2: cfg.lambda2,
        tau: cfg.tau,
    })
}

/// Gradient magnitude of a negative with cosine `s` to the anchor.
pub fn gradient_magnitude(s: f64, tau: f64) -> f64 {
    (1.0 - s * s).max(0.0).sqrt() * (s / tau).exp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientCurve {
    pub points: Vec<(f64, f64)>,
    pub s0: f64,
    pub g0: f64,
}

/// Evaluates `g(s) = sqrt(1 − s²)·exp(s/τ)` on `grid` and locates its
/// maximiser `s₀`, the root of `s/(1 − s²) = 1/τ` in `(0, 1)`.
pub fn gradient_curve(tau: f64, grid: &[f64]) -> Result<GradientCurve> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::invalid(format!("temperature must be positive, got {tau}")));
    }
    if let Some(s) = grid.iter().find(|s| !(-1.0..=1.0).contains(*s)) {
        return Err(Error::invalid(format!("similarity {s} outside [-1, 1]")));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if mid / (1.0 - mid * mid) < 1.0 / tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s0 = 0.5 * (lo + hi);
    Ok(GradientCurve {
        points: grid.iter().map(|&s| (s, gradient_magnitude(s, tau))).collect(),
        s0,
        g0: gradient_magnitude(s0, tau),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(r: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&r.iter().map(|x| x.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn equal_cosines_give_zero_loss() {
        let v = rows(&[&[1.0, 0.0], &[1.0, 0.0]]);
        let out = infonce(&v, &v, &[0, 1], &InfoNceConfig::default()).unwrap();
        assert!(out.loss.abs() < 1e-12);
    }

    #[test]
    fn hand_evaluated_positive_exclusion() {
        let v1 = rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let v2 = rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let out = infonce(&v1, &v2, &[0, 1], &InfoNceConfig::default()).unwrap();
        assert!((out.loss + 5.0).abs() < 1e-12);
        let with_pos = InfoNceConfig {
            include_positive_in_denominator: true,
            ..InfoNceConfig::default()
        };
        let inc = infonce(&v1, &v2, &[0, 1], &with_pos).unwrap();
        assert!(inc.loss > out.loss);
        assert!((inc.loss - (1.0 + (-5f64).exp()).ln()).abs() < 1e-12);
    }

    #[test]
    fn high_temperature_limit() {
        let v1 = rows(&[&[1.0, 0.3], &[0.2, 1.0], &[-0.5, 0.4], &[0.9, -0.9]]);
        let v2 = rows(&[&[0.7, 0.1], &[0.0, 1.0], &[0.5, 0.5], &[-0.2, -0.8]]);
        let cfg = InfoNceConfig {
            tau: 1e9,
            ..InfoNceConfig::default()
        };
        let out = infonce(&v1, &v2, &[0, 1, 2, 3], &cfg).unwrap();
        assert!((out.loss - 3f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn singleton_batch_is_rejected() {
        let v = rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(infonce(&v, &v, &[0], &InfoNceConfig::default()).is_err());
        assert!(infonce(&v, &v, &[0, 0], &InfoNceConfig::default()).is_err());
        let full = InfoNceConfig {
            scope: NegativeScope::Full,
            ..InfoNceConfig::default()
        };
        assert!(infonce(&v, &v, &[0], &full).is_ok());
    }

    #[test]
    fn swapping_views_transposes_the_similarity_matrix() {
        let v1 = rows(&[&[1.0, 0.3, 0.1], &[0.2, 1.0, -0.4], &[-0.5, 0.4, 0.9]]);
        let v2 = rows(&[&[0.7, 0.1, 0.0], &[0.3, 1.0, 0.2], &[0.5, 0.5, -0.6]]);
        let cfg = InfoNceConfig::default();
        let swapped = infonce(&v2, &v1, &[0, 1, 2], &cfg).unwrap().loss;
        let cos = |a: &[f64], b: &[f64]| {
            let n = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
            a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (n(a) * n(b))
        };
        // Column-wise denominators of S = cos(v1, v2).
        let mut expected = 0.0;
        for n in 0..3 {
            let den: f64 = (0..3).filter(|&m| m != n).map(|m| (cos(v1.row(m), v2.row(n)) / 0.2).exp()).sum();
            expected += -(cos(v1.row(n), v2.row(n)) / 0.2) + den.ln();
        }
        assert!((swapped - expected / 3.0).abs() < 1e-6);
    }

    #[test]
    fn bpr_examples() {
        let g = InteractionGraph::from_edges(1, 2, vec![(0, 0)]).unwrap().0;
        let u = rows(&[&[1.0, 0.0]]);
        let equal = bpr(&u, &rows(&[&[0.5, 1.0], &[0.5, -3.0]]), &g, &[(0, 0, 1)]).unwrap();
        assert!((equal.loss - 2f64.ln()).abs() < 1e-15);
        let two = bpr(&u, &rows(&[&[2.5, 0.0], &[0.5, 0.0]]), &g, &[(0, 0, 1)]).unwrap();
        assert!((two.loss - 0.126928).abs() < 1e-6);
        let far = bpr(&u, &rows(&[&[60.0, 0.0], &[0.0, 0.0]]), &g, &[(0, 0, 1)]).unwrap();
        assert!(far.loss > 0.0 && far.loss < 1e-20);
    }

    #[test]
    fn bpr_validates_triples() {
        let g = InteractionGraph::from_edges(1, 3, vec![(0, 0), (0, 1)]).unwrap().0;
        let u = rows(&[&[1.0]]);
        let i = rows(&[&[1.0], &[1.0], &[1.0]]);
        assert!(bpr(&u, &i, &g, &[(0, 2, 1)]).is_err());
        assert!(bpr(&u, &i, &g, &[(0, 0, 1)]).is_err());
        assert!(bpr(&u, &i, &g, &[(0, 0, 3)]).is_err());
        assert!(bpr(&u, &i, &g, &[]).is_err());
        assert!(bpr(&u, &i, &g, &[(0, 0, 2)]).is_ok());
    }

    #[test]
    fn gradient_curve_values() {
        let c = gradient_curve(0.2, &[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(c.points, vec![(-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)]);
        let closed_form = (101f64.sqrt() - 1.0) / 10.0;
        assert!((c.s0 - closed_form).abs() < 1e-9);
        assert!((c.g0 - 39.27).abs() < 0.01, "{}", c.g0);
        assert!(gradient_curve(0.2, &[1.5]).is_err());
        assert!(gradient_curve(0.0, &[0.0]).is_err());
        assert!(gradient_curve(0.3, &[]).unwrap().g0 < c.g0);
    }

    #[test]
    fn gradient_curve_is_unimodal() {
        let grid: Vec<f64> = (0..=10_000).map(|k| k as f64 / 10_000.0).collect();
        let c = gradient_curve(0.2, &grid).unwrap();
        for w in c.points.windows(2) {
            let ((s, g), (_, h)) = (w[0], w[1]);
            if s < c.s0 - 1e-4 {
                assert!(h > g, "not increasing at {s}");
            } else if s > c.s0 {
                assert!(h < g, "not decreasing at {s}");
            }
        }
    }
}
