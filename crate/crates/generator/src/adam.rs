//! Adaptive-moment gradient descent over a list of tensors.

use serde::{Deserialize, Serialize};

use crate::tensor::Mat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(cfg: AdamConfig) -> Adam {
        Adam { cfg, step: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One update. `lrs[i]` is the step size of tensor `i`.
    pub fn update(&mut self, params: Vec<&mut Mat>, grads: Vec<&Mat>, lrs: &[f64]) {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), lrs.len());
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![0.0; g.data.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let (b1, b2) = (self.cfg.beta1, self.cfg.beta2);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for j in 0..g.data.len() {
                let gj = g.data[j];
                m[j] = b1 * m[j] + (1.0 - b1) * gj;
                v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
                p.data[j] -= lrs[i] * (m[j] / c1) / ((v[j] / c2).sqrt() + self.cfg.eps);
            }
        }
    }
}

/// Rescales gradients so their global L2 norm is at most `max_norm`; returns
/// the norm before clipping.
pub fn clip_global_norm(grads: Vec<&mut Mat>, max_norm: f64) -> f64 {
    let norm = grads.iter().flat_map(|g| g.data.iter()).map(|v| v * v).sum::<f64>().sqrt();
    if max_norm > 0.0 && norm > max_norm {
        for g in grads {
            g.scale(max_norm / norm);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_a_quadratic() {
        let mut x = Mat::from_vec(1, 2, vec![3.0, -2.0]);
        let mut opt = Adam::new(AdamConfig::default());
        for _ in 0..2000 {
            let g = Mat::from_vec(1, 2, vec![2.0 * (x.data[0] - 1.0), 2.0 * (x.data[1] + 0.5)]);
            opt.update(vec![&mut x], vec![&g], &[0.01]);
        }
        assert!((x.data[0] - 1.0).abs() < 1e-3 && (x.data[1] + 0.5).abs() < 1e-3, "{:?}", x.data);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut x = Mat::from_vec(1, 1, vec![0.0]);
        let g = Mat::from_vec(1, 1, vec![5.0]);
        Adam::new(AdamConfig::default()).update(vec![&mut x], vec![&g], &[0.1]);
        assert!((x.data[0] + 0.1).abs() < 1e-6);
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut a = Mat::from_vec(1, 2, vec![3.0, 4.0]);
        let n = clip_global_norm(vec![&mut a], 1.0);
        assert_eq!(n, 5.0);
        assert!((a.data[0] - 0.6).abs() < 1e-12 && (a.data[1] - 0.8).abs() < 1e-12);
    }
}
