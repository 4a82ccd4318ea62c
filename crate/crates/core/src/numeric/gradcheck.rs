//! Central-difference verification of hand-derived gradients.

use rand::Rng as _;

use super::{ParamStore, Rng, Tensor};
use crate::{Error, Result, Scalar};

/// One scalar parameter: a tensor and a flat row-major index into it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamCoord {
    pub tensor: Tensor,
    pub index: usize,
}

/// Draws `count` coordinates uniformly over all parameters of the store.
pub fn sample_coords<F: Scalar>(store: &ParamStore<F>, count: usize, rng: &mut Rng) -> Vec<ParamCoord> {
    let sizes: Vec<(Tensor, usize)> = Tensor::ALL
        .iter()
        .map(|&t| (t, store.param(t).as_slice().len()))
        .collect();
    let total: usize = sizes.iter().map(|s| s.1).sum();
    (0..count)
        .map(|_| {
            let mut k = rng.random_range(0..total);
            for &(tensor, len) in &sizes {
                if k < len {
                    return ParamCoord { tensor, index: k };
                }
                k -= len;
            }
            unreachable!()
        })
        .collect()
}

/// Compares the analytic gradient already accumulated in `store` against
/// central differences `(L(θ+h) − L(θ−h)) / 2h` at each coordinate.
///
/// Returns the largest relative error, with denominator
/// `max(|analytic|, |numeric|, 1e-8)`. The loss is evaluated twice at the
/// unperturbed point first; differing values are reported as an error.
pub fn finite_diff_check<F, L>(store: &ParamStore<F>, coords: &[ParamCoord], h: f64, mut loss: L) -> Result<f64>
where
    F: Scalar,
    L: FnMut(&ParamStore<F>) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::invalid(format!("finite-difference step must be positive, got {h}")));
    }
    let first = loss(store);
    let second = loss(store);
    if first.to_bits() != second.to_bits() {
        return Err(Error::NonDeterministic { first, second });
    }

    let mut probe = store.clone();
    let mut worst = 0.0f64;
    for c in coords {
        let orig = probe.param(c.tensor).as_slice()[c.index];
        probe.param_mut(c.tensor).as_mut_slice()[c.index] = orig + F::of(h);
        let plus = loss(&probe);
        probe.param_mut(c.tensor).as_mut_slice()[c.index] = orig - F::of(h);
        let minus = loss(&probe);
        probe.param_mut(c.tensor).as_mut_slice()[c.index] = orig;

        let numeric = (plus - minus) / (2.0 * h);
        let analytic = store.grad(c.tensor).as_slice()[c.index].f64();
        let denom = analytic.abs().max(numeric.abs()).max(1e-8);
        let rel = (analytic - numeric).abs() / denom;
        log::trace!("{:?}: analytic {analytic:e} numeric {numeric:e} rel {rel:e}", c);
        worst = worst.max(rel);
    }
    Ok(worst)
}
