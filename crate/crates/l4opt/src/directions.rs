//! Update directions for the adaptive-stepsize rule.
//!
//! Both flavors derive from bias-corrected EMAs of the gradient stream:
//!
//! * momentum: `v = g = EMA_tau_m(grad)` — the gradient estimate and the
//!   direction are one and the same average, so `g.v = |v|^2 >= 0` holds
//!   bit-exactly;
//! * Adam-style: `g` as above, `v_i = g_i / sqrt(EMA_tau_s(grad_i^2) + 1e-24)`,
//!   which still guarantees `g.v = sum g_i^2 / sqrt(...) >= 0`.

use crate::averaging::EmaState;
use crate::error::Result;
use serde::{Deserialize, Serialize};

/// Guard added under the square root of the second-moment estimate. Small
/// enough to never matter for any live coordinate; it only keeps coordinates
/// with an exactly-zero gradient history at `v_i = 0` instead of `0/0`.
pub const SECOND_MOMENT_GUARD: f64 = 1e-24;

/// Which update direction the optimizer uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// Momentum direction: the gradient EMA itself.
    Mom,
    /// Adam direction: gradient EMA scaled by the inverse root of the
    /// second-moment EMA.
    Adam,
}

/// EMA state backing the `(g, v)` pair of one optimizer instance.
#[derive(Clone, Debug)]
pub struct DirectionState {
    flavor: Flavor,
    momentum: EmaState,
    /// Present only for the Adam flavor.
    second_moment: Option<EmaState>,
}

impl DirectionState {
    /// Fresh state. `tau_m` is the gradient-average timescale (default 10),
    /// `tau_s` the second-moment timescale (default 1000). Dimension locks on
    /// the first observed gradient.
    pub fn new(flavor: Flavor, tau_m: f64, tau_s: f64) -> DirectionState {
        DirectionState {
            flavor,
            momentum: EmaState::new(tau_m),
            second_moment: match flavor {
                Flavor::Mom => None,
                Flavor::Adam => Some(EmaState::new(tau_s)),
            },
        }
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    /// Consume one gradient and return `(g, v)`: the gradient estimate used
    /// in the stepsize numerator's inner product, and the update direction.
    ///
    /// For the momentum flavor the two vectors are the same average (returned
    /// as two copies of identical bits). Errors on non-finite gradients.
    pub fn compute_gv(&mut self, grad: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let g = self.momentum.update(grad)?;
        let v = match &mut self.second_moment {
            None => g.clone(),
            Some(sm) => {
                let sq: Vec<f64> = grad.iter().map(|x| x * x).collect();
                let s = sm.update(&sq)?;
                g.iter()
                    .zip(s.iter())
                    .map(|(&gi, &si)| gi / (si + SECOND_MOMENT_GUARD).sqrt())
                    .collect()
            }
        };
        Ok((g, v))
    }
}
