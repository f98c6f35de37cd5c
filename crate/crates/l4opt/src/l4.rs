//! The adaptive-stepsize update rule.
//!
//! Given a loss sample `L`, a gradient estimate `g`, an update direction `v`,
//! and a running estimate `L_min` of the attainable minimum loss, the step is
//!
//! ```text
//! eta   = alpha * (L - gamma * L_min) / (g.v + epsilon)
//! theta = theta - eta * v
//! ```
//!
//! — the stepsize a linear model of the loss says would close a fraction
//! `alpha` of the gap down to `gamma * L_min`. `L_min` is maintained as a
//! running minimum that is slightly inflated (`* (1 + 1/tau)`) after every
//! step so stale minima are gradually forgotten.
//!
//! Step order is normative and matches the recurrence the defaults were
//! tuned for: (1) update the direction EMAs from the new gradient, (2) fold
//! the new loss into `L_min`, (3) compute `eta` and update the parameters,
//! (4) apply the forgetting factor to `L_min`.

use crate::directions::{DirectionState, Flavor};
use crate::error::{Error, Result};
use crate::numerics::{all_finite, dot};
use serde::{Deserialize, Serialize};

// ======================================================================
// Configuration
// ======================================================================

fn default_alpha() -> f64 {
    0.15
}
fn default_gamma() -> f64 {
    0.9
}
fn default_gamma0() -> f64 {
    0.75
}
fn default_tau() -> f64 {
    1000.0
}
fn default_epsilon() -> f64 {
    1e-12
}
fn default_tau_m() -> f64 {
    10.0
}
fn default_tau_s() -> f64 {
    1000.0
}

/// Hyperparameters of the adaptive-stepsize rule. The defaults are the
/// recommended setting and are intended to be left alone; `alpha` is the only
/// knob that normally gets touched.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct L4Config {
    /// Fraction of the loss gap to close per step. Default 0.15.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Fraction of `L_min` used as the target loss, `0 < gamma <= 1`.
    /// Default 0.9.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Fraction of the first observed loss used to initialize `L_min`,
    /// `0 < gamma0 <= 1`. Default 0.75.
    #[serde(default = "default_gamma0")]
    pub gamma0: f64,
    /// Forgetting timescale of `L_min` in steps; after each update `L_min`
    /// grows by the factor `1 + 1/tau`. Default 1000.
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Additive guard in the stepsize denominator. Default 1e-12.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Which update direction to use.
    pub flavor: Flavor,
    /// Timescale of the gradient EMA. Default 10.
    #[serde(default = "default_tau_m")]
    pub tau_m: f64,
    /// Timescale of the squared-gradient EMA (Adam flavor only). Default 1000.
    #[serde(default = "default_tau_s")]
    pub tau_s: f64,
}

impl L4Config {
    /// Default configuration with the momentum direction.
    pub fn mom() -> L4Config {
        L4Config {
            alpha: default_alpha(),
            gamma: default_gamma(),
            gamma0: default_gamma0(),
            tau: default_tau(),
            epsilon: default_epsilon(),
            flavor: Flavor::Mom,
            tau_m: default_tau_m(),
            tau_s: default_tau_s(),
        }
    }

    /// Default configuration with the Adam-style direction.
    pub fn adam() -> L4Config {
        L4Config {
            flavor: Flavor::Adam,
            ..L4Config::mom()
        }
    }

    /// Same configuration with a different gap fraction.
    pub fn with_alpha(self, alpha: f64) -> L4Config {
        L4Config { alpha, ..self }
    }

    /// Check every documented range; called by [`L4State::init`].
    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Err(Error::InvalidConfig { message });
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must be in (0, 1], got {}", self.gamma));
        }
        if !(self.gamma0 > 0.0 && self.gamma0 <= 1.0) {
            return bad(format!("gamma0 must be in (0, 1], got {}", self.gamma0));
        }
        if !(self.tau.is_finite() && self.tau >= 1.0) {
            return bad(format!("tau must be >= 1, got {}", self.tau));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.tau_m.is_finite() && self.tau_m >= 1.0) {
            return bad(format!("tau_m must be >= 1, got {}", self.tau_m));
        }
        if !(self.tau_s.is_finite() && self.tau_s >= 1.0) {
            return bad(format!("tau_s must be >= 1, got {}", self.tau_s));
        }
        Ok(())
    }
}

// ======================================================================
// State and stepping
// ======================================================================

/// What one step did, for logging and analysis.
#[derive(Clone, Copy, Debug)]
pub struct StepRecord {
    /// The adaptive stepsize that was applied.
    pub eta: f64,
    /// The loss sample that drove the step.
    pub loss: f64,
    /// `gamma * L_min` as it entered the stepsize numerator (after the
    /// running-minimum update, before the forgetting factor).
    pub lmin_used: f64,
    /// Inner product `g.v` from the denominator; non-negative by
    /// construction of the direction pair.
    pub gv: f64,
}

impl StepRecord {
    /// The effective learning rate of the step — the adaptive quantity a
    /// fixed-stepsize method would have needed as `lr` to take this step.
    pub fn effective_lr(&self) -> f64 {
        self.eta
    }
}

/// Mutable optimizer state: the `L_min` estimate plus the direction EMAs.
#[derive(Clone, Debug)]
pub struct L4State {
    lmin: f64,
    t: u64,
    dir: DirectionState,
    last_finite_loss: f64,
}

/// The stepsize the rule prescribes for a loss `loss`, a running minimum
/// `lmin` (already folded with the current loss), and a compatibility product
/// `gv`. Exposed separately so the stepsize policy can be analyzed without
/// running an optimizer.
pub fn compute_eta(config: &L4Config, loss: f64, lmin: f64, gv: f64) -> f64 {
    config.alpha * (loss - config.gamma * lmin) / (gv + config.epsilon)
}

impl L4State {
    /// Initialize from the first observed loss: `L_min = gamma0 * first_loss`.
    ///
    /// Errors if the configuration is out of range or `first_loss` is
    /// negative or non-finite. The caller is expected to perform the first
    /// [`step`](L4State::step) with the same loss sample (and its gradient)
    /// that initialized the state.
    pub fn init(config: &L4Config, first_loss: f64) -> Result<L4State> {
        config.validate()?;
        if !first_loss.is_finite() || first_loss < 0.0 {
            return Err(Error::InvalidLoss { loss: first_loss });
        }
        Ok(L4State {
            lmin: config.gamma0 * first_loss,
            t: 0,
            dir: DirectionState::new(config.flavor, config.tau_m, config.tau_s),
            last_finite_loss: first_loss,
        })
    }

    /// Current minimum-loss estimate (inflated by past forgetting factors).
    pub fn lmin(&self) -> f64 {
        self.lmin
    }

    /// Number of parameter updates performed.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Perform one update in place on `params` and report what happened.
    ///
    /// Errors: negative loss is a contract violation ([`Error::InvalidLoss`]);
    /// a non-finite loss, gradient, or resulting parameter vector aborts with
    /// [`Error::Diverged`] carrying the step index and the last finite loss.
    pub fn step(
        &mut self,
        config: &L4Config,
        loss: f64,
        grad: &[f64],
        params: &mut [f64],
    ) -> Result<StepRecord> {
        assert_eq!(grad.len(), params.len(), "step: gradient/parameter length mismatch");
        let step_index = self.t + 1;
        if !loss.is_finite() {
            return Err(Error::Diverged {
                quantity: "loss",
                step: step_index,
                last_finite_loss: self.last_finite_loss,
            });
        }
        if loss < 0.0 {
            return Err(Error::InvalidLoss { loss });
        }
        if !all_finite(grad) {
            return Err(Error::Diverged {
                quantity: "gradient",
                step: step_index,
                last_finite_loss: self.last_finite_loss,
            });
        }
        self.last_finite_loss = loss;

        // (1) direction pair from the new gradient
        let (g, v) = self.dir.compute_gv(grad)?;
        // (2) fold the new loss into the running minimum
        self.lmin = self.lmin.min(loss);
        // (3) stepsize from the loss gap, then the parameter update
        let gv = dot(&g, &v);
        let eta = compute_eta(config, loss, self.lmin, gv);
        for i in 0..params.len() {
            params[i] -= eta * v[i];
        }
        let record = StepRecord {
            eta,
            loss,
            lmin_used: config.gamma * self.lmin,
            gv,
        };
        // (4) slowly forget the minimum so stale estimates decay
        self.lmin *= 1.0 + 1.0 / config.tau;
        self.t = step_index;

        if !all_finite(params) {
            return Err(Error::Diverged {
                quantity: "parameters",
                step: step_index,
                last_finite_loss: self.last_finite_loss,
            });
        }
        Ok(record)
    }
}
