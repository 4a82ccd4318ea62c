//! Dense kernels, parameter storage, seeded randomness, Adam and the
//! finite-difference gradient checker.
//!
//! Every loss in this crate follows the same contract: it reads parameters
//! from a [`ParamStore`], returns its value, and *adds* its gradient into
//! the store's accumulators. [`gradcheck::finite_diff_check`] verifies that
//! contract numerically.

mod adam;
pub mod gradcheck;
mod matrix;
mod params;
pub mod rng;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{finite_diff_check, ParamCoord};
pub use matrix::{axpy, dot, norm, Matrix};
pub use params::{init_params, ParamStore, Tensor, VocabSizes};
pub use rng::{derive_seed, rng_from_seed, Rng};
