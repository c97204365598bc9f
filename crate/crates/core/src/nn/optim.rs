use serde::{Deserialize, Serialize};

use super::Parameters;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

/// AdamW with bias correction. Moments are laid out in the parameter
/// visitation order of the module they were created for.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub config: AdamWConfig,
    first: Vec<f64>,
    second: Vec<f64>,
    step: u64,
}

impl AdamW {
    pub fn new(parameter_count: usize, config: AdamWConfig) -> Self {
        Self {
            config,
            first: vec![0.0; parameter_count],
            second: vec![0.0; parameter_count],
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One update at learning rate `lr`. Decay is decoupled: `p -= lr * wd
    /// * p` is applied before the adaptive step.
    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P, lr: f64) -> Result<()> {
        let g = grads.flatten();
        if g.len() != self.first.len() {
            return Err(Error::DimensionMismatch {
                expected: self.first.len(),
                actual: g.len(),
            });
        }
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient entry {i} at optimizer step {}",
                self.step + 1
            )));
        }
        self.step += 1;
        let AdamWConfig {
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        let (m, v) = (&mut self.first, &mut self.second);
        let mut offset = 0;
        params.visit_mut("", &mut |_, p| {
            for (j, x) in p.iter_mut().enumerate() {
                let k = offset + j;
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                *x -= lr * weight_decay * *x;
                *x -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
            }
            offset += p.len();
        });
        Ok(())
    }
}

/// `base_lr * 0.5 * (1 + cos(pi * step / total))`.
pub fn cosine_lr(step: usize, total_steps: usize, base_lr: f64) -> Result<f64> {
    if total_steps == 0 {
        return Err(Error::invalid("cosine schedule needs total_steps > 0"));
    }
    let frac = step.min(total_steps) as f64 / total_steps as f64;
    Ok(base_lr * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos()))
}

pub fn global_norm<P: Parameters>(grads: &P) -> f64 {
    let mut sq = 0.0;
    grads.visit("", &mut |_, _, v| sq += v.iter().map(|x| x * x).sum::<f64>());
    sq.sqrt()
}

/// Rescale so the global L2 norm is at most `max_norm`; returns the norm
/// before clipping.
pub fn clip_global_norm<P: Parameters>(grads: &mut P, max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm && norm.is_finite() {
        let s = max_norm / norm;
        grads.visit_mut("", &mut |_, v| v.iter_mut().for_each(|x| *x *= s));
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Dense};
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array1, Array2};
    use proptest::prelude::*;

    fn scalar(v: f64) -> Dense {
        Dense {
            weight: array![[v]],
            bias: Array1::zeros(1),
            activation: Activation::Identity,
        }
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = scalar(1.0);
        let g = scalar(1.0);
        let mut opt = AdamW::new(
            2,
            AdamWConfig {
                weight_decay: 0.0,
                ..Default::default()
            },
        );
        opt.step(&mut p, &g, 0.1).unwrap();
        // m_hat = 1 and v_hat = 1, so the step is 0.1 / (1 + 1e-8).
        assert_abs_diff_eq!(p.weight[[0, 0]], 1.0 - 0.1 / (1.0 + 1e-8), epsilon = 1e-15);
        assert_eq!(p.bias[0], 0.0);
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut p = scalar(0.7);
        let mut opt = AdamW::new(
            2,
            AdamWConfig {
                weight_decay: 0.0,
                ..Default::default()
            },
        );
        opt.step(&mut p, &scalar(0.0), 0.1).unwrap();
        assert_eq!(p.weight[[0, 0]], 0.7);
    }

    #[test]
    fn decay_only_shrinks_geometrically() {
        let mut p = scalar(-2.0);
        let mut opt = AdamW::new(
            2,
            AdamWConfig {
                weight_decay: 0.5,
                ..Default::default()
            },
        );
        opt.step(&mut p, &scalar(0.0), 0.1).unwrap();
        assert_abs_diff_eq!(p.weight[[0, 0]], -2.0 * (1.0 - 0.05), epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_finite_gradients() {
        let mut p = scalar(1.0);
        let mut opt = AdamW::new(2, AdamWConfig::default());
        assert!(opt.step(&mut p, &scalar(f64::NAN), 0.1).unwrap_err().is_numeric());
    }

    #[test]
    fn cosine_schedule_endpoints() {
        assert_eq!(cosine_lr(0, 100, 1e-3).unwrap(), 1e-3);
        assert_abs_diff_eq!(cosine_lr(100, 100, 1e-3).unwrap(), 0.0, epsilon = 1e-18);
        assert_abs_diff_eq!(cosine_lr(50, 100, 1e-3).unwrap(), 5e-4, epsilon = 1e-18);
        assert!(cosine_lr(0, 0, 1e-3).is_err());
    }

    #[test]
    fn clipping_caps_the_norm() {
        let mut g = Dense {
            weight: Array2::from_elem((2, 2), 3.0),
            bias: Array1::from_elem(2, 4.0),
            activation: Activation::Identity,
        };
        let before = clip_global_norm(&mut g, 5.0);
        assert_abs_diff_eq!(before, (4.0 * 9.0 + 2.0 * 16.0f64).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(global_norm(&g), 5.0, epsilon = 1e-12);
    }

    proptest! {
        /// Loss `0.5 * sum(a_i * x_i^2)` with positive curvatures.
        #[test]
        fn one_step_descends_on_a_quadratic(
            x0 in proptest::collection::vec(-3.0f64..3.0, 3),
            a in proptest::collection::vec(0.1f64..5.0, 3),
        ) {
            prop_assume!(x0.iter().all(|v| v.abs() > 1e-2));
            let loss = |p: &Dense| (0..3).map(|i| 0.5 * a[i] * p.weight[[0, i]].powi(2)).sum::<f64>();
            let mut p = Dense::zeros(1, 3, Activation::Identity);
            p.weight = Array2::from_shape_vec((1, 3), x0.clone()).unwrap();
            let mut g = Dense::zeros(1, 3, Activation::Identity);
            g.weight = Array2::from_shape_fn((1, 3), |(_, i)| a[i] * x0[i]);
            let before = loss(&p);
            let mut opt = AdamW::new(6, AdamWConfig::default());
            opt.step(&mut p, &g, 1e-3).unwrap();
            prop_assert!(loss(&p) < before);
        }
    }
}
