use super::{Matrix, ParamStore, Tensor};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments mirroring a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<F> {
    pub config: AdamConfig,
    step: u64,
    first: [Matrix<F>; 4],
    second: [Matrix<F>; 4],
}

impl<F: Scalar> AdamState<F> {
    pub fn new(store: &ParamStore<F>, config: AdamConfig) -> Self {
        let zeros = Tensor::ALL.map(|t| {
            let (r, c) = store.param(t).shape();
            Matrix::zeros(r, c)
        });
        AdamState {
            config,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub(crate) fn from_parts(
        config: AdamConfig,
        step: u64,
        first: [Matrix<F>; 4],
        second: [Matrix<F>; 4],
    ) -> Self {
        AdamState {
            config,
            step,
            first,
            second,
        }
    }

    pub fn config(&self) -> AdamConfig {
        self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, t: Tensor) -> &Matrix<F> {
        &self.first[t as usize]
    }

    pub fn second_moment(&self, t: Tensor) -> &Matrix<F> {
        &self.second[t as usize]
    }

    /// Applies one Adam update from the store's accumulated gradients.
    ///
    /// Gradients are left in place. A non-finite gradient aborts before any
    /// parameter is touched.
    pub fn step(&mut self, store: &mut ParamStore<F>) -> Result<()> {
        for t in Tensor::ALL {
            if !store.grad(t).is_finite() {
                return Err(Error::NonFiniteGradient { tensor: t.name() });
            }
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let bias1 = 1.0 - beta1.powi(self.step as i32);
        let bias2 = 1.0 - beta2.powi(self.step as i32);
        let (b1, b2) = (F::of(beta1), F::of(beta2));
        let (one_b1, one_b2) = (F::of(1.0 - beta1), F::of(1.0 - beta2));
        let step_size = F::of(lr / bias1);
        let inv_sqrt_bias2 = F::of(1.0 / bias2.sqrt());
        let eps = F::of(eps);

        for t in Tensor::ALL {
            let i = t as usize;
            let (param, grad) = store.split_mut(t);
            let m = self.first[i].as_mut_slice();
            let v = self.second[i].as_mut_slice();
            for (((p, &g), m), v) in param
                .as_mut_slice()
                .iter_mut()
                .zip(grad.as_slice())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *m = b1 * *m + one_b1 * g;
                *v = b2 * *v + one_b2 * g * g;
                *p -= step_size * *m / (v.sqrt() * inv_sqrt_bias2 + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::VocabSizes;

    fn scalar_store(value: f64) -> ParamStore<f64> {
        let v = VocabSizes {
            num_users: 1,
            num_entities: 1,
            num_relations: 1,
        };
        let mut s = ParamStore::zeros(v, 1);
        s.param_mut(Tensor::User).set(0, 0, value);
        s
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut s = scalar_store(1.0);
        let before = s.clone();
        let mut adam = AdamState::new(&s, AdamConfig::default());
        for _ in 0..5 {
            adam.step(&mut s).unwrap();
        }
        assert_eq!(s, before);
        assert_eq!(adam.step_count(), 5);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m_hat = g, v_hat = g^2  =>  delta = lr * g / (|g| + eps)
        let mut s = scalar_store(1.0);
        s.grad_mut(Tensor::User).set(0, 0, 1.0);
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut adam = AdamState::new(&s, cfg);
        adam.step(&mut s).unwrap();
        let p = s.users().get(0, 0);
        let expected = 1.0 - 0.1 * 1.0 / (1.0 + 1e-8);
        assert!((p - expected).abs() < 1e-12, "{p}");
        assert!((p - 0.9).abs() < 1e-7);
        // gradients are left for the caller to clear
        assert_eq!(s.grad(Tensor::User).get(0, 0), 1.0);
    }

    #[test]
    fn repeated_steps_accumulate_moments() {
        let mut s = scalar_store(1.0);
        s.grad_mut(Tensor::User).set(0, 0, 1.0);
        let mut adam = AdamState::new(&s, AdamConfig::default());
        adam.step(&mut s).unwrap();
        let m1 = adam.first_moment(Tensor::User).get(0, 0);
        adam.step(&mut s).unwrap();
        let m2 = adam.first_moment(Tensor::User).get(0, 0);
        assert_ne!(m1, m2);
    }

    #[test]
    fn vanishing_learning_rate_leaves_params() {
        let mut s = scalar_store(0.25);
        s.grad_mut(Tensor::User).set(0, 0, -3.0);
        let mut adam = AdamState::new(
            &s,
            AdamConfig {
                lr: 1e-300,
                ..AdamConfig::default()
            },
        );
        adam.step(&mut s).unwrap();
        assert_eq!(s.users().get(0, 0), 0.25);
    }

    #[test]
    fn non_finite_gradient_names_tensor() {
        let mut s = scalar_store(1.0);
        s.grad_mut(Tensor::Relation).set(0, 0, f64::NAN);
        let before = s.clone();
        let mut adam = AdamState::new(&s, AdamConfig::default());
        match adam.step(&mut s) {
            Err(Error::NonFiniteGradient { tensor }) => assert_eq!(tensor, "relation"),
            other => panic!("unexpected {other:?}"),
        }
        for t in Tensor::ALL {
            assert_eq!(s.param(t), before.param(t));
        }
        assert_eq!(adam.step_count(), 0);
    }
}
