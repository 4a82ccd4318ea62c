//! Knowledge-graph-guided contrastive learning for top-N recommendation.
//!
//! The pipeline has four stages that share one embedding space:
//!
//! 1. [`kg_encoder`] aggregates each item's knowledge-graph neighbours with
//!    relation-aware attention and trains a translational (TransE) objective
//!    on the triples in alternation with the recommender.
//! 2. [`augment`] draws two stochastic knowledge-graph views, scores every
//!    item by how stable its aggregated embedding is across them, and turns
//!    those scores into keep probabilities for interaction edges.
//! 3. [`cf_encoder`] runs linear light-graph-convolution propagation over the
//!    full interaction graph (for ranking) and over the two masked views (for
//!    the contrastive objective).
//! 4. [`losses`] combines BPR, InfoNCE and L2 into the joint objective, with
//!    hand-derived gradients checked by [`numeric::gradcheck`].
//!
//! [`trainer`] orchestrates epochs and checkpoints, [`eval`] implements
//! all-ranking Recall@N / NDCG@N and the experiment drivers.
//!
//! All math is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! name the concrete instantiations used by the command-line tool and the
//! gradient checks.

pub mod augment;
pub mod cf_encoder;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod kg_encoder;
pub mod losses;
pub mod numeric;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar used for training runs and checkpoints written by the CLI.
pub type DefaultScalar = f32;

pub type Matrix32 = numeric::Matrix<f32>;
pub type Matrix64 = numeric::Matrix<f64>;
pub type ParamStore32 = numeric::ParamStore<f32>;
pub type ParamStore64 = numeric::ParamStore<f64>;
pub type Checkpoint32 = trainer::Checkpoint<f32>;
pub type Checkpoint64 = trainer::Checkpoint<f64>;
