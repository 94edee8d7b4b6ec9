use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            ..Self::default()
        }
    }
}

/// Adam with bias-corrected moment estimates, one moment pair per parameter
/// tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    config: AdamConfig,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
    step_count: u64,
}

impl AdamState {
    /// `sizes[i]` is the element count of parameter tensor `i`.
    pub fn new(config: AdamConfig, sizes: &[usize]) -> Self {
        AdamState {
            config,
            first_moment: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step_count: 0,
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[Vec<f64>] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Vec<f64>] {
        &self.second_moment
    }

    /// Applies one update in place. Shapes are checked before anything is
    /// modified.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        let found: Vec<usize> = params.iter().map(|p| p.len()).collect();
        let expected: Vec<usize> = self.first_moment.iter().map(Vec::len).collect();
        let grad_sizes: Vec<usize> = grads.iter().map(|g| g.len()).collect();
        if found != expected {
            return Err(Error::ShapeMismatch { expected, found });
        }
        if grad_sizes != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: grad_sizes,
            });
        }

        self.step_count += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step_count as i32;
        let correction1 = 1.0 - beta1.powi(t);
        let correction2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / correction1;
                let v_hat = v[i] / correction2;
                p[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut state = AdamState::new(AdamConfig::default(), &[3]);
        let mut p = vec![1.0, -2.0, 0.5];
        state.step(&mut [&mut p], &[&[0.0; 3]]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_is_signed_learning_rate() {
        for g in [0.3, -7.0, 0.05] {
            let mut state = AdamState::new(AdamConfig::default(), &[1]);
            let mut p = vec![0.0];
            state.step(&mut [&mut p], &[&[g]]).unwrap();
            let lr = state.config().learning_rate;
            assert!((p[0] + lr * g.signum()).abs() < lr * 1e-6, "{}", p[0]);
        }
    }

    #[test]
    fn converges_on_quadratic() {
        let mut state = AdamState::new(AdamConfig::with_learning_rate(0.1), &[1]);
        let mut w = vec![0.0];
        for _ in 0..200 {
            let g = 2.0 * (w[0] - 3.0);
            state.step(&mut [&mut w], &[&[g]]).unwrap();
        }
        assert!((w[0] - 3.0).abs() < 0.1, "{}", w[0]);
    }

    #[test]
    fn shape_mismatch_is_rejected_without_mutation() {
        let mut state = AdamState::new(AdamConfig::default(), &[2]);
        let mut p = vec![1.0, 2.0, 3.0];
        assert!(matches!(
            state.step(&mut [&mut p], &[&[1.0, 1.0, 1.0]]),
            Err(Error::ShapeMismatch { .. })
        ));
        assert_eq!(state.step_count(), 0);
        let mut p = vec![1.0, 2.0];
        assert!(state.step(&mut [&mut p], &[&[1.0]]).is_err());
    }

    #[test]
    fn bit_reproducible() {
        let run = || {
            let mut state = AdamState::new(AdamConfig::default(), &[4]);
            let mut p = vec![0.1, 0.2, 0.3, 0.4];
            for k in 0..50 {
                let g: Vec<f64> = p.iter().map(|x| (x * 3.7 + k as f64).sin()).collect();
                state.step(&mut [&mut p], &[&g]).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }
}
