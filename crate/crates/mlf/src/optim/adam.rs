//! Adam with bias-corrected moments and a stepped exponential learning-rate decay.

use crate::error::{Error, Result};

/// Hyperparameters shared by Adam and SOAP's inner update.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Multiplicative decay applied to the learning rate every `lr_decay_every` steps.
    pub lr_decay: f64,
    pub lr_decay_every: u64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            lr_decay: 0.98,
            lr_decay_every: 1000,
        }
    }
}

impl AdamConfig {
    pub fn lr_at(&self, t: u64) -> f64 {
        debug_assert!(t >= 1);
        self.lr * self.lr_decay.powi(((t - 1) / self.lr_decay_every) as i32)
    }
}

/// First/second moment buffers for one parameter block.
#[derive(Debug, Clone)]
pub struct Moments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Moments {
    pub fn zeros(n: usize) -> Self {
        Moments {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

/// One bias-corrected moment update; writes `m̂/(√v̂ + ε)` into `dir`.
/// Shared verbatim by Adam and SOAP so that SOAP with identity bases follows
/// the exact same arithmetic.
pub fn adam_direction(mom: &mut Moments, cfg: &AdamConfig, t: u64, grad: &[f64], dir: &mut [f64]) {
    debug_assert_eq!(mom.m.len(), grad.len());
    debug_assert_eq!(dir.len(), grad.len());
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..grad.len() {
        let g = grad[i];
        mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g;
        mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = mom.m[i] / bc1;
        let v_hat = mom.v[i] / bc2;
        dir[i] = m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Adam over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    moments: Moments,
    t: u64,
    dir: Vec<f64>,
}

impl Adam {
    pub fn new(cfg: AdamConfig, n_params: usize) -> Self {
        Adam {
            cfg,
            moments: Moments::zeros(n_params),
            t: 0,
            dir: vec![0.0; n_params],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// θ ← θ − η_t · m̂/(√v̂ + ε)
    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) -> Result<()> {
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::numerical("non-finite gradient in Adam step"));
        }
        self.t += 1;
        let lr = self.cfg.lr_at(self.t);
        adam_direction(&mut self.moments, &self.cfg, self.t, grad, &mut self.dir);
        for (th, d) in theta.iter_mut().zip(&self.dir) {
            *th -= lr * d;
        }
        Ok(())
    }
}
