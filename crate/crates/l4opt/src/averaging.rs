//! Bias-corrected exponential moving averages over vector streams.
//!
//! The average is parameterized by a timescale `tau` (in steps) rather than a
//! decay factor: `beta = 1 - 1/tau`. After `t` updates the raw accumulator
//! underestimates the recent stream by a factor `1 - beta^t`, which the
//! output divides away, so the very first output equals the first input.

use crate::error::{Error, Result};
use crate::numerics::all_finite;

/// Bias-corrected EMA state over fixed-dimension vectors.
///
/// The dimension locks on the first update; `zeros` of the right length are
/// assumed as the initial accumulator.
#[derive(Clone, Debug)]
pub struct EmaState {
    /// Decay factor `1 - 1/tau`, precomputed once.
    beta: f64,
    /// Update weight `1 - beta`, precomputed once so the first output's
    /// numerator and denominator use the identical float.
    weight: f64,
    /// Running `beta^t`, maintained by repeated multiplication (no `powf`
    /// in the hot path, and its underflow to zero for large `t` is benign:
    /// the correction factor just saturates at 1).
    pow: f64,
    /// Number of updates consumed.
    t: u64,
    /// Raw (uncorrected) accumulator; empty until the first update.
    m: Vec<f64>,
}

impl EmaState {
    /// New average with timescale `tau >= 1` (in steps). `tau = 1` disables
    /// averaging entirely: the output is always the latest input.
    pub fn new(tau: f64) -> EmaState {
        assert!(
            tau.is_finite() && tau >= 1.0,
            "EmaState: tau must be finite and >= 1, got {tau}"
        );
        let beta = 1.0 - 1.0 / tau;
        EmaState {
            beta,
            weight: 1.0 - beta,
            pow: 1.0,
            t: 0,
            m: Vec::new(),
        }
    }

    /// Timescale this average was built with.
    pub fn tau(&self) -> f64 {
        1.0 / self.weight
    }

    /// Updates consumed so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Consume one input vector and return the bias-corrected average
    /// `m_t / (1 - beta^t)` with `m_t = beta * m_{t-1} + (1 - beta) * x`.
    ///
    /// Errors if the input contains a non-finite value — by the time a NaN or
    /// infinity reaches the averager, something upstream (usually the
    /// gradient) has already blown up, and folding it in would poison the
    /// state irrecoverably.
    pub fn update(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        if !all_finite(x) {
            return Err(Error::NonFinite {
                what: "moving-average input",
            });
        }
        if self.m.is_empty() {
            self.m = vec![0.0; x.len()];
        }
        assert_eq!(
            self.m.len(),
            x.len(),
            "EmaState: dimension changed from {} to {}",
            self.m.len(),
            x.len()
        );
        self.t += 1;
        self.pow *= self.beta;
        let denom = 1.0 - self.pow;
        let mut out = vec![0.0; x.len()];
        for i in 0..x.len() {
            self.m[i] = self.beta * self.m[i] + self.weight * x[i];
            out[i] = self.m[i] / denom;
        }
        Ok(out)
    }
}
