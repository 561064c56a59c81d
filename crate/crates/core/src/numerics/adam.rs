use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{math, Parameter};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 0.001, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Bias-corrected Adam. Moment buffers are keyed by the position of each
/// parameter in the slice handed to [`Adam::step`], so callers must pass the
/// same parameters in the same order every time.
#[derive(Clone, Debug)]
pub struct Adam {
    pub config: AdamConfig,
    steps: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam { config, steps: 0, first: Vec::new(), second: Vec::new() }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Apply one update to every trainable parameter and zero every
    /// gradient. Frozen values are left alone.
    pub fn step(&mut self, params: &mut [&mut Parameter]) {
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![0.0; if p.trainable { p.len() } else { 0 }]).collect();
            self.second = self.first.clone();
        }
        assert_eq!(self.first.len(), params.len(), "Adam parameter list changed");
        self.steps += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - math::powi(beta1, self.steps as i32);
        let bc2 = 1.0 - math::powi(beta2, self.steps as i32);
        for ((p, m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
            if p.trainable {
                let Parameter { value, grad, .. } = &mut **p;
                for ((w, &g), (mi, vi)) in value.values_mut().iter_mut().zip(grad.values()).zip(m.iter_mut().zip(v.iter_mut())) {
                    *mi = beta1 * *mi + (1.0 - beta1) * g;
                    *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                    let m_hat = *mi / bc1;
                    let v_hat = *vi / bc2;
                    *w -= lr * m_hat / (math::sqrt(v_hat) + eps);
                }
            }
            p.zero_grad();
        }
    }
}
