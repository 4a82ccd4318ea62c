use rand::Rng as _;

use super::{Matrix, Rng};
use crate::{Error, Result, Scalar};

/// The four trainable tensors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tensor {
    /// `num_users x d`
    User,
    /// `num_entities x d`; rows `0..num_items` are the item embeddings.
    Entity,
    /// `num_relations x d`
    Relation,
    /// Attention projection, `d x 2d`.
    Attention,
}

impl Tensor {
    pub const ALL: [Tensor; 4] = [
        Tensor::User,
        Tensor::Entity,
        Tensor::Relation,
        Tensor::Attention,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tensor::User => "user",
            Tensor::Entity => "entity",
            Tensor::Relation => "relation",
            Tensor::Attention => "attention",
        }
    }

    pub fn from_name(name: &str) -> Option<Tensor> {
        Tensor::ALL.into_iter().find(|t| t.name() == name)
    }

    #[inline]
    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VocabSizes {
    pub num_users: usize,
    pub num_entities: usize,
    pub num_relations: usize,
}

/// All trainable parameters with same-shaped gradient accumulators.
///
/// Shapes are fixed at construction. Losses add into the accumulators; the
/// caller zeroes them between optimizer steps.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStore<F> {
    params: [Matrix<F>; 4],
    grads: [Matrix<F>; 4],
}

impl<F: Scalar> ParamStore<F> {
    pub fn zeros(vocab: VocabSizes, dim: usize) -> Self {
        let params = [
            Matrix::zeros(vocab.num_users, dim),
            Matrix::zeros(vocab.num_entities, dim),
            Matrix::zeros(vocab.num_relations, dim),
            Matrix::zeros(dim, 2 * dim),
        ];
        let grads = params.clone();
        ParamStore { params, grads }
    }

    /// Builds a store from explicit tensors. Shapes must be consistent.
    pub fn from_tensors(
        user: Matrix<F>,
        entity: Matrix<F>,
        relation: Matrix<F>,
        attention: Matrix<F>,
    ) -> Result<Self> {
        let d = entity.cols();
        if user.cols() != d || relation.cols() != d || attention.shape() != (d, 2 * d) {
            return Err(Error::invalid(format!(
                "inconsistent tensor shapes: user {:?}, entity {:?}, relation {:?}, attention {:?}",
                user.shape(),
                entity.shape(),
                relation.shape(),
                attention.shape()
            )));
        }
        let params = [user, entity, relation, attention];
        let grads = params.clone().map(|m| Matrix::zeros(m.rows(), m.cols()));
        Ok(ParamStore { params, grads })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.params[1].cols()
    }

    pub fn vocab(&self) -> VocabSizes {
        VocabSizes {
            num_users: self.params[0].rows(),
            num_entities: self.params[1].rows(),
            num_relations: self.params[2].rows(),
        }
    }

    #[inline]
    pub fn param(&self, t: Tensor) -> &Matrix<F> {
        &self.params[t.index()]
    }

    #[inline]
    pub fn param_mut(&mut self, t: Tensor) -> &mut Matrix<F> {
        &mut self.params[t.index()]
    }

    #[inline]
    pub fn grad(&self, t: Tensor) -> &Matrix<F> {
        &self.grads[t.index()]
    }

    #[inline]
    pub fn grad_mut(&mut self, t: Tensor) -> &mut Matrix<F> {
        &mut self.grads[t.index()]
    }

    #[inline]
    pub fn users(&self) -> &Matrix<F> {
        self.param(Tensor::User)
    }

    #[inline]
    pub fn entities(&self) -> &Matrix<F> {
        self.param(Tensor::Entity)
    }

    #[inline]
    pub fn relations(&self) -> &Matrix<F> {
        self.param(Tensor::Relation)
    }

    #[inline]
    pub fn attention(&self) -> &Matrix<F> {
        self.param(Tensor::Attention)
    }

    /// Parameter tensor and its gradient accumulator, borrowed together.
    pub fn split_mut(&mut self, t: Tensor) -> (&mut Matrix<F>, &mut Matrix<F>) {
        (&mut self.params[t.index()], &mut self.grads[t.index()])
    }

    /// All parameters read-only alongside all gradients mutable, indexed
    /// by `Tensor as usize`.
    pub(crate) fn params_and_grads(&mut self) -> (&[Matrix<F>; 4], &mut [Matrix<F>; 4]) {
        (&self.params, &mut self.grads)
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            g.fill(F::zero());
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(Matrix::is_finite)
    }

    /// Copy of the store with all values converted to another scalar type.
    pub fn cast<G: Scalar>(&self) -> ParamStore<G> {
        ParamStore {
            params: self.params.clone().map(|m| m.map(|x| G::of(x.f64()))),
            grads: self.grads.clone().map(|m| m.map(|x| G::of(x.f64()))),
        }
    }
}

/// Glorot-uniform initialisation: each tensor is drawn from `U[-a, a]`
/// with `a = sqrt(6 / (rows + cols))`.
pub fn init_params<F: Scalar>(vocab: VocabSizes, dim: usize, rng: &mut Rng) -> Result<ParamStore<F>> {
    if dim == 0 {
        return Err(Error::invalid("embedding dimension must be at least 1"));
    }
    if vocab.num_users == 0 || vocab.num_entities == 0 || vocab.num_relations == 0 {
        return Err(Error::invalid(format!(
            "vocabulary sizes must be positive, got {vocab:?}"
        )));
    }
    let mut store = ParamStore::zeros(vocab, dim);
    for t in Tensor::ALL {
        let m = store.param_mut(t);
        let bound = glorot_bound(m.rows(), m.cols());
        for x in m.as_mut_slice() {
            *x = F::of(rng.random_range(-bound..=bound));
        }
    }
    Ok(store)
}

pub(crate) fn glorot_bound(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}
