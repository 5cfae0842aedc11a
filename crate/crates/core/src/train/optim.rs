//! Adam with coupled L2 weight decay (`g += wd * w` before the moments).

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Adam {
    config: AdamConfig,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
    t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, shapes: &[Vec<f32>]) -> Self {
        let zeros = || shapes.iter().map(|p| vec![0.0; p.len()]).collect();
        Self {
            config,
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [Vec<f32>], grads: &[Vec<f32>], lr: f64) {
        self.t += 1;
        let AdamConfig {
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        let step = lr / bc1;
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                let gi = g[i] as f64 + weight_decay * p[i] as f64;
                let mi = beta1 * m[i] as f64 + (1.0 - beta1) * gi;
                let vi = beta2 * v[i] as f64 + (1.0 - beta2) * gi * gi;
                m[i] = mi as f32;
                v[i] = vi as f32;
                p[i] = (p[i] as f64 - step * mi / ((vi / bc2).sqrt() + eps)) as f32;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let cfg = AdamConfig {
            weight_decay: 0.0,
            ..AdamConfig::default()
        };
        let mut p = vec![vec![1.0f32, -2.0, 0.5]];
        let g = vec![vec![0.3f32, -7.0, 0.0]];
        let mut opt = Adam::new(cfg, &p);
        opt.step(&mut p, &g, 0.01);
        assert!((p[0][0] - 0.99).abs() < 1e-6);
        assert!((p[0][1] + 1.99).abs() < 1e-6);
        assert_eq!(p[0][2], 0.5);
    }

    #[test]
    fn zero_rate_is_a_no_op() {
        let mut p = vec![vec![1.0f32, 2.0]];
        let before = p.clone();
        let mut opt = Adam::new(AdamConfig::default(), &p);
        opt.step(&mut p, &[vec![5.0, -1.0]], 0.0);
        assert_eq!(p, before);
    }
}
