//! Linear light-graph-convolution over the user–item bipartite graph.
//!
//! Each layer replaces a node's embedding by the degree-normalised sum of its
//! neighbours' previous-layer embeddings; the final representation is the
//! mean of layers `0..=L`. Degrees are those of the (possibly masked) graph
//! being propagated.
//!
//! The layer operator is symmetric, so the gradient of the final embeddings
//! with respect to layer 0 is the same propagation applied to the incoming
//! gradients ([`NormalizedAdjacency::propagate_final`] serves both).

use crate::augment::UiMask;
use crate::data::InteractionGraph;
use crate::numeric::{axpy, dot, Matrix, ParamStore};
use crate::{Error, Result, Scalar};

/// Symmetrically normalised bipartite adjacency of one graph view.
#[derive(Clone, Debug)]
pub struct NormalizedAdjacency<F> {
    num_users: usize,
    num_items: usize,
    user_ptr: Vec<usize>,
    user_nbrs: Vec<(usize, F)>,
    item_ptr: Vec<usize>,
    item_nbrs: Vec<(usize, F)>,
}

impl<F: Scalar> NormalizedAdjacency<F> {
    pub fn new(graph: &InteractionGraph, mask: Option<&UiMask>) -> Self {
        let kept = |e: usize| mask.is_none_or(|m| m.keeps(e));
        let mut user_deg = vec![0usize; graph.num_users()];
        let mut item_deg = vec![0usize; graph.num_items()];
        for (e, &(u, i)) in graph.edges().iter().enumerate() {
            if kept(e) {
                user_deg[u] += 1;
                item_deg[i] += 1;
            }
        }
        let weight = |u: usize, i: usize| F::of(1.0 / ((user_deg[u] * item_deg[i]) as f64).sqrt());

        let mut user_ptr = Vec::with_capacity(graph.num_users() + 1);
        let mut user_nbrs = Vec::new();
        user_ptr.push(0);
        for u in 0..graph.num_users() {
            for e in graph.user_edge_range(u) {
                if kept(e) {
                    let i = graph.edges()[e].1;
                    user_nbrs.push((i, weight(u, i)));
                }
            }
            user_ptr.push(user_nbrs.len());
        }
        let mut item_ptr = Vec::with_capacity(graph.num_items() + 1);
        let mut item_nbrs = Vec::new();
        item_ptr.push(0);
        for i in 0..graph.num_items() {
            for &(u, e) in graph.item_users(i) {
                if kept(e) {
                    item_nbrs.push((u, weight(u, i)));
                }
            }
            item_ptr.push(item_nbrs.len());
        }
        NormalizedAdjacency {
            num_users: graph.num_users(),
            num_items: graph.num_items(),
            user_ptr,
            user_nbrs,
            item_ptr,
            item_nbrs,
        }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_edges(&self) -> usize {
        self.user_nbrs.len()
    }

    pub fn user_neighbors(&self, u: usize) -> &[(usize, F)] {
        &self.user_nbrs[self.user_ptr[u]..self.user_ptr[u + 1]]
    }

    pub fn item_neighbors(&self, i: usize) -> &[(usize, F)] {
        &self.item_nbrs[self.item_ptr[i]..self.item_ptr[i + 1]]
    }

    fn layer(&self, users: &Matrix<F>, items: &Matrix<F>) -> (Matrix<F>, Matrix<F>) {
        let d = users.cols();
        let mut next_users = Matrix::zeros(self.num_users, d);
        for u in 0..self.num_users {
            let row = next_users.row_mut(u);
            for &(i, w) in self.user_neighbors(u) {
                axpy(w, items.row(i), row);
            }
        }
        let mut next_items = Matrix::zeros(self.num_items, d);
        for i in 0..self.num_items {
            let row = next_items.row_mut(i);
            for &(u, w) in self.item_neighbors(i) {
                axpy(w, users.row(u), row);
            }
        }
        (next_users, next_items)
    }

    fn check_shapes(&self, users: &Matrix<F>, items: &Matrix<F>) -> Result<()> {
        if users.rows() != self.num_users || items.rows() != self.num_items || users.cols() != items.cols() {
            return Err(Error::invalid(format!(
                "propagation input shapes {:?} / {:?} do not match a {}x{} graph",
                users.shape(),
                items.shape(),
                self.num_users,
                self.num_items
            )));
        }
        Ok(())
    }

    /// Runs `layers` propagation steps and keeps every layer.
    pub fn propagate(&self, users: Matrix<F>, items: Matrix<F>, layers: usize) -> Result<PropagationOutput<F>> {
        if layers == 0 {
            return Err(Error::invalid("propagation needs at least one layer"));
        }
        self.check_shapes(&users, &items)?;
        let mut per_layer = Vec::with_capacity(layers + 1);
        per_layer.push((users, items));
        for _ in 0..layers {
            let (u, i) = per_layer.last().unwrap();
            let next = self.layer(u, i);
            per_layer.push(next);
        }
        let (user_final, item_final) = mean_of_layers(&per_layer);
        Ok(PropagationOutput {
            user_final,
            item_final,
            per_layer,
        })
    }

    /// Final embeddings only; also the exact backward map of [`Self::propagate`].
    pub fn propagate_final(&self, users: &Matrix<F>, items: &Matrix<F>, layers: usize) -> Result<(Matrix<F>, Matrix<F>)> {
        if layers == 0 {
            return Err(Error::invalid("propagation needs at least one layer"));
        }
        self.check_shapes(users, items)?;
        let mut sum_u = users.clone();
        let mut sum_i = items.clone();
        let (mut cur_u, mut cur_i) = self.layer(users, items);
        for l in 1..=layers {
            sum_u.add_scaled(F::one(), &cur_u);
            sum_i.add_scaled(F::one(), &cur_i);
            if l < layers {
                let next = self.layer(&cur_u, &cur_i);
                cur_u = next.0;
                cur_i = next.1;
            }
        }
        let inv = F::of(1.0 / (layers + 1) as f64);
        sum_u.scale(inv);
        sum_i.scale(inv);
        Ok((sum_u, sum_i))
    }
}

fn mean_of_layers<F: Scalar>(layers: &[(Matrix<F>, Matrix<F>)]) -> (Matrix<F>, Matrix<F>) {
    let mut u = layers[0].0.clone();
    let mut i = layers[0].1.clone();
    for (lu, li) in &layers[1..] {
        u.add_scaled(F::one(), lu);
        i.add_scaled(F::one(), li);
    }
    let inv = F::of(1.0 / layers.len() as f64);
    u.scale(inv);
    i.scale(inv);
    (u, i)
}

/// Propagated embeddings of one graph view.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationOutput<F> {
    pub user_final: Matrix<F>,
    pub item_final: Matrix<F>,
    /// `(users, items)` at layers `0..=L`.
    pub per_layer: Vec<(Matrix<F>, Matrix<F>)>,
}

/// Propagates the store's user embeddings together with the given layer-0
/// item embeddings (normally the knowledge-aware aggregation).
pub fn propagate<F: Scalar>(
    store: &ParamStore<F>,
    item_layer0: &Matrix<F>,
    adj: &NormalizedAdjacency<F>,
    layers: usize,
) -> Result<PropagationOutput<F>> {
    adj.propagate(store.users().clone(), item_layer0.clone(), layers)
}

impl<F: Scalar> PropagationOutput<F> {
    pub fn num_users(&self) -> usize {
        self.user_final.rows()
    }

    pub fn num_items(&self) -> usize {
        self.item_final.rows()
    }

    pub fn layers(&self) -> usize {
        self.per_layer.len() - 1
    }
}

/// Anything that can assign a preference score to every item for a user.
pub trait Scorer {
    fn num_users(&self) -> usize;
    fn num_items(&self) -> usize;
    /// Writes one score per item into `out`.
    fn score_items(&self, user: usize, out: &mut [f64]);
}

impl<F: Scalar> Scorer for PropagationOutput<F> {
    fn num_users(&self) -> usize {
        self.user_final.rows()
    }

    fn num_items(&self) -> usize {
        self.item_final.rows()
    }

    fn score_items(&self, user: usize, out: &mut [f64]) {
        let u = self.user_final.row(user);
        for (i, s) in out.iter_mut().enumerate() {
            *s = dot(u, self.item_final.row(i)).f64();
        }
    }
}

/// Ranks items by training-set popularity, identically for every user.
#[derive(Clone, Debug)]
pub struct PopularityScorer {
    num_users: usize,
    degrees: Vec<f64>,
}

impl PopularityScorer {
    pub fn new(train: &InteractionGraph) -> Self {
        PopularityScorer {
            num_users: train.num_users(),
            degrees: (0..train.num_items()).map(|i| train.item_degree(i) as f64).collect(),
        }
    }
}

impl Scorer for PopularityScorer {
    fn num_users(&self) -> usize {
        self.num_users
    }

    fn num_items(&self) -> usize {
        self.degrees.len()
    }

    fn score_items(&self, _user: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.degrees);
    }
}

fn check_user<S: Scorer + ?Sized>(s: &S, u: usize) -> Result<()> {
    if u >= s.num_users() {
        return Err(Error::invalid(format!("user {u} out of range ({} users)", s.num_users())));
    }
    Ok(())
}

/// `⟨user_final[u], item_final[i]⟩`.
pub fn score<F: Scalar>(out: &PropagationOutput<F>, u: usize, i: usize) -> Result<F> {
    check_user(out, u)?;
    if i >= out.num_items() {
        return Err(Error::invalid(format!("item {i} out of range ({} items)", out.num_items())));
    }
    Ok(dot(out.user_final.row(u), out.item_final.row(i)))
}

/// All items except `exclude`, best first; ties go to the smaller item id.
pub fn score_all<S: Scorer + ?Sized>(scorer: &S, u: usize, exclude: &[usize]) -> Result<Vec<usize>> {
    check_user(scorer, u)?;
    let mut scores = vec![0.0; scorer.num_items()];
    scorer.score_items(u, &mut scores);
    Ok(rank_scores(&scores, exclude))
}

pub(crate) fn rank_scores(scores: &[f64], exclude: &[usize]) -> Vec<usize> {
    let mut excluded = vec![false; scores.len()];
    for &i in exclude {
        if i < excluded.len() {
            excluded[i] = true;
        }
    }
    let mut order: Vec<usize> = (0..scores.len()).filter(|&i| !excluded[i]).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}
