use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    /// Contiguous mini-batch length; `None` trains on the full range.
    pub batch_len: Option<usize>,
    /// Learning rate reached at the last epoch, as a fraction of `lr`,
    /// with exponential decay in between. 1 keeps the rate constant.
    pub final_lr_fraction: f64,
    pub seed: u64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 1000,
            batch_len: None,
            final_lr_fraction: 1.0,
            seed: 0,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr.is_finite()
            && self.lr >= 0.0
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.eps > 0.0
            && self.epochs > 0
            && self.batch_len != Some(0)
            && self.final_lr_fraction > 0.0
            && self.final_lr_fraction.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Adam configuration {self:?}")))
        }
    }

    /// Learning rate for a zero-based epoch index.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        if self.final_lr_fraction == 1.0 || self.epochs <= 1 {
            return self.lr;
        }
        let t = epoch as f64 / (self.epochs - 1) as f64;
        self.lr * self.final_lr_fraction.powf(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Number of steps taken so far.
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update with learning rate `lr`. The step index
/// is `state.t + 1`. A non-finite gradient leaves params and state untouched.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    cfg: &AdamConfig,
    lr: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::LengthMismatch {
            what: "adam params vs grads",
            left: params.len(),
            right: grads.len(),
        });
    }
    let t = state.t + 1;
    if let Some((index, &value)) = grads.iter().enumerate().find(|(_, g)| !g.is_finite()) {
        return Err(Error::NonFiniteGradient {
            index,
            value,
            step: t,
        });
    }
    let bc1 = 1.0 - cfg.beta1.powf(t as f64);
    let bc2 = 1.0 - cfg.beta2.powf(t as f64);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    state.t = t;
    Ok(())
}
