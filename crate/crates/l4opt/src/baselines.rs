//! Fixed-stepsize baseline optimizers: SGD, heavy-ball momentum, and Adam.
//!
//! These are the reference points the adaptive-stepsize runs are compared
//! against. No gradient clipping anywhere — divergence is reported, not
//! masked.

use crate::error::{Error, Result};
use crate::numerics::all_finite;
use serde::{Deserialize, Serialize};

fn default_beta() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
/// Adam's denominator guard, added **outside** the square root. Deliberately
/// large (the TensorFlow-style setting) to damp instability.
fn default_adam_epsilon() -> f64 {
    1e-4
}

/// Baseline optimizer choice and hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaselineConfig {
    /// Plain gradient descent: `theta -= lr * g`.
    Sgd { lr: f64 },
    /// Heavy-ball momentum. The accumulator uses the *accumulate* form
    /// `m = beta * m + g` by default; `dampened` switches to
    /// `m = beta * m + (1 - beta) * g` for experiments that want the EMA
    /// normalization instead.
    Momentum {
        lr: f64,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default)]
        dampened: bool,
    },
    /// Bias-corrected Adam with the guard outside the root:
    /// `theta -= lr * m_hat / (sqrt(s_hat) + epsilon)`.
    Adam {
        lr: f64,
        #[serde(default = "default_beta")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_adam_epsilon")]
        epsilon: f64,
    },
}

impl BaselineConfig {
    /// SGD with the given learning rate.
    pub fn sgd(lr: f64) -> BaselineConfig {
        BaselineConfig::Sgd { lr }
    }

    /// Momentum with `beta = 0.9`, accumulate form.
    pub fn momentum(lr: f64) -> BaselineConfig {
        BaselineConfig::Momentum {
            lr,
            beta: default_beta(),
            dampened: false,
        }
    }

    /// Adam with `beta1 = 0.9`, `beta2 = 0.999`, `epsilon = 1e-4`.
    pub fn adam(lr: f64) -> BaselineConfig {
        BaselineConfig::Adam {
            lr,
            beta1: default_beta(),
            beta2: default_beta2(),
            epsilon: default_adam_epsilon(),
        }
    }

    /// The configured learning rate.
    pub fn lr(&self) -> f64 {
        match *self {
            BaselineConfig::Sgd { lr }
            | BaselineConfig::Momentum { lr, .. }
            | BaselineConfig::Adam { lr, .. } => lr,
        }
    }

    /// Same optimizer with a different learning rate (used by grid search).
    pub fn with_lr(self, lr: f64) -> BaselineConfig {
        match self {
            BaselineConfig::Sgd { .. } => BaselineConfig::Sgd { lr },
            BaselineConfig::Momentum { beta, dampened, .. } => {
                BaselineConfig::Momentum { lr, beta, dampened }
            }
            BaselineConfig::Adam {
                beta1,
                beta2,
                epsilon,
                ..
            } => BaselineConfig::Adam {
                lr,
                beta1,
                beta2,
                epsilon,
            },
        }
    }

    /// Short lowercase name for run ids and tables.
    pub fn kind_name(&self) -> &'static str {
        match self {
            BaselineConfig::Sgd { .. } => "sgd",
            BaselineConfig::Momentum { .. } => "momentum",
            BaselineConfig::Adam { .. } => "adam",
        }
    }

    /// Check every documented range.
    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Err(Error::InvalidConfig { message });
        if !(self.lr().is_finite() && self.lr() > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.lr()));
        }
        match *self {
            BaselineConfig::Sgd { .. } => {}
            BaselineConfig::Momentum { beta, .. } => {
                if !(0.0..1.0).contains(&beta) {
                    return bad(format!("momentum beta must be in [0, 1), got {beta}"));
                }
            }
            BaselineConfig::Adam {
                beta1,
                beta2,
                epsilon,
                ..
            } => {
                if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
                    return bad(format!(
                        "adam betas must be in [0, 1), got {beta1}, {beta2}"
                    ));
                }
                if !(epsilon.is_finite() && epsilon > 0.0) {
                    return bad(format!("adam epsilon must be positive, got {epsilon}"));
                }
            }
        }
        Ok(())
    }
}

/// Mutable accumulators of a baseline optimizer. Dimensions lock on the
/// first step.
#[derive(Clone, Debug, Default)]
pub struct BaselineState {
    t: u64,
    m: Vec<f64>,
    s: Vec<f64>,
}

impl BaselineState {
    pub fn new() -> BaselineState {
        BaselineState::default()
    }

    /// Updates performed so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Apply one update in place.
    ///
    /// Baselines never observe loss values, so the divergence error's
    /// `last_finite_loss` is reported as NaN here; a harness that tracks
    /// losses enriches the error before recording it.
    pub fn step(
        &mut self,
        config: &BaselineConfig,
        grad: &[f64],
        params: &mut [f64],
    ) -> Result<()> {
        assert_eq!(grad.len(), params.len(), "step: gradient/parameter length mismatch");
        let step_index = self.t + 1;
        let diverged = |quantity: &'static str| Error::Diverged {
            quantity,
            step: step_index,
            last_finite_loss: f64::NAN,
        };
        if !all_finite(grad) {
            return Err(diverged("gradient"));
        }
        if self.m.is_empty() {
            self.m = vec![0.0; grad.len()];
            if matches!(config, BaselineConfig::Adam { .. }) {
                self.s = vec![0.0; grad.len()];
            }
        }
        assert_eq!(self.m.len(), grad.len(), "step: dimension changed");
        self.t = step_index;

        match *config {
            BaselineConfig::Sgd { lr } => {
                for i in 0..params.len() {
                    params[i] -= lr * grad[i];
                }
            }
            BaselineConfig::Momentum { lr, beta, dampened } => {
                let gain = if dampened { 1.0 - beta } else { 1.0 };
                for i in 0..params.len() {
                    self.m[i] = beta * self.m[i] + gain * grad[i];
                    params[i] -= lr * self.m[i];
                }
            }
            BaselineConfig::Adam {
                lr,
                beta1,
                beta2,
                epsilon,
            } => {
                let bc1 = 1.0 - beta1.powi(self.t as i32);
                let bc2 = 1.0 - beta2.powi(self.t as i32);
                for i in 0..params.len() {
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
                    self.s[i] = beta2 * self.s[i] + (1.0 - beta2) * grad[i] * grad[i];
                    let m_hat = self.m[i] / bc1;
                    let s_hat = self.s[i] / bc2;
                    params[i] -= lr * m_hat / (s_hat.sqrt() + epsilon);
                }
            }
        }

        if !all_finite(params) {
            return Err(diverged("parameters"));
        }
        Ok(())
    }
}
