use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl AdamState {
    pub fn new(param_count: usize, config: AdamConfig) -> Self {
        Self {
            config,
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::DimensionMismatch {
                context: "adam step",
                expected: self.first_moment.len(),
                got: if params.len() != self.first_moment.len() {
                    params.len()
                } else {
                    grads.len()
                },
            });
        }
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.step_count += 1;
        let t = self.step_count as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_gradients_leave_params_unchanged() {
        let mut s = AdamState::new(3, AdamConfig::default());
        let mut p = vec![1.0, -2.0, 0.5];
        for _ in 0..10 {
            s.step(&mut p, &[0.0; 3]).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(s.step_count(), 10);
    }

    #[test]
    fn moments_decay_under_zero_gradient() {
        let mut s = AdamState::new(1, AdamConfig::default());
        let mut p = vec![0.0];
        s.step(&mut p, &[1.0]).unwrap();
        let (m0, v0) = (s.first_moment()[0], s.second_moment()[0]);
        s.step(&mut p, &[0.0]).unwrap();
        assert!(s.first_moment()[0].abs() < m0.abs());
        assert!(s.second_moment()[0] < v0);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig::default();
        let mut s = AdamState::new(1, cfg);
        let mut p = vec![0.0];
        s.step(&mut p, &[1.0]).unwrap();
        // m̂ = 1, v̂ = 1 at t = 1
        assert_relative_eq!(p[0], -cfg.lr / (1.0 + cfg.epsilon), max_relative = 1e-15);
        assert_relative_eq!(p[0], -0.001, max_relative = 1e-7);
    }

    #[test]
    fn two_constant_gradient_steps_match_hand_computation() {
        let cfg = AdamConfig {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        };
        let g = 0.3;
        let mut s = AdamState::new(1, cfg);
        let mut p = vec![1.0];
        s.step(&mut p, &[g]).unwrap();
        s.step(&mut p, &[g]).unwrap();

        // step 1: m = 0.03, v = 9e-5; m̂ = 0.3, v̂ = 0.09
        let p1 = 1.0 - 0.01 * 0.3 / (0.3 + 1e-8);
        // step 2: m = 0.9·0.03 + 0.1·0.3 = 0.057, v = 0.999·9e-5 + 0.001·0.09 = 1.7991e-4
        let m_hat = 0.057 / (1.0 - 0.81);
        let v_hat: f64 = 1.7991e-4 / (1.0 - 0.998001);
        let p2 = p1 - 0.01 * m_hat / (v_hat.sqrt() + 1e-8);
        assert_relative_eq!(p[0], p2, max_relative = 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::new(2, AdamConfig::default());
        assert!(s.step(&mut [0.0; 3], &[0.0; 3]).is_err());
        assert!(s.step(&mut [0.0; 2], &[0.0; 1]).is_err());
        assert_eq!(s.step_count(), 0);
    }
}
