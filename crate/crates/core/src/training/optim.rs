//! AdamW with decoupled weight decay and a per-epoch cosine schedule.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Learning rate for `epoch` (0-based) of `total`: `lr0 · ½(1 + cos(π·epoch/total))`,
/// annealing to 0.
pub fn cosine_lr(lr0: f64, epoch: usize, total: usize) -> f64 {
    if total == 0 {
        return lr0;
    }
    let t = epoch.min(total) as f64 / total as f64;
    0.5 * lr0 * (1.0 + (PI * t).cos())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamW {
    pub fn new(n_params: usize, weight_decay: f64) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One update of `params` in place. `params` and `grads` are flat views in
    /// the same order on every call.
    pub fn step<'a>(
        &mut self,
        lr: f64,
        params: impl Iterator<Item = &'a mut f64>,
        grads: impl Iterator<Item = f64>,
    ) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (((p, g), m), v) in params
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *p -= lr * self.weight_decay * *p;
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let mhat = *m / bc1;
            let vhat = *v / bc2;
            *p -= lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}
