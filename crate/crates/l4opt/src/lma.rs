//! Levenberg-Marquardt reference solver for the conditioned regression.
//!
//! Each iteration assembles the per-sample residual Jacobian of the bilinear
//! model explicitly, forms the damped normal equations
//! `(JᵀJ + lambda I) delta = Jᵀ rho`, and proposes `theta - alpha * delta`.
//! Improving proposals are accepted and relax the damping; failing ones are
//! rejected and escalate it (classic multiplicative Marquardt damping, which
//! degrades gracefully from a Gauss-Newton step at small `lambda` to scaled
//! gradient descent at large `lambda`). Every iteration — accepted or not —
//! costs one Jacobian assembly and one factorization attempt, which is what
//! makes the per-iteration cost comparison against first-order methods fair.
//!
//! Residuals are scaled by `1/sqrt(n)` so that their squared norm equals the
//! mean-over-samples loss used everywhere else.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Seed};
use crate::problems::{ConditionedRegression, Problem};

/// Damping bracket shared by default configurations.
const LAMBDA_MIN: f64 = 1e-12;
const LAMBDA_MAX: f64 = 1e12;

/// Levenberg-Marquardt settings.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct LmaConfig {
    /// Fraction of the solved step that is applied: `theta <- theta - alpha * delta`.
    pub alpha: f64,
    /// Initial damping.
    pub lambda0: f64,
    /// Multiplier applied to `lambda` when a step is rejected.
    pub lambda_up: f64,
    /// Multiplier applied to `lambda` when a step is accepted.
    pub lambda_down: f64,
    /// Lower edge of the damping bracket; accepted steps never push
    /// `lambda` below this (it is clamped, not an error).
    pub lambda_min: f64,
    /// Upper edge of the damping bracket; needing more damping than this
    /// aborts with a diagnostics error.
    pub lambda_max: f64,
    /// Iteration budget; exhausting it reports non-convergence, not an error.
    pub max_iters: u64,
    /// Full-dataset loss below which the solve stops as converged.
    pub target_loss: f64,
}

impl Default for LmaConfig {
    fn default() -> LmaConfig {
        LmaConfig {
            alpha: 0.3,
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 0.1,
            lambda_min: LAMBDA_MIN,
            lambda_max: LAMBDA_MAX,
            max_iters: 1000,
            target_loss: 1e-8,
        }
    }
}

impl LmaConfig {
    /// Check the documented ranges.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(format!(
                "lma alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.lambda0.is_finite() && self.lambda0 > 0.0) {
            return Err(Error::config(format!(
                "lambda0 must be positive, got {}",
                self.lambda0
            )));
        }
        if !(self.lambda_up.is_finite() && self.lambda_up > 1.0) {
            return Err(Error::config(format!(
                "lambda_up must exceed 1 so rejections make progress towards the bracket edge, \
                 got {}",
                self.lambda_up
            )));
        }
        if !(self.lambda_down.is_finite() && self.lambda_down > 0.0) {
            return Err(Error::config(format!(
                "lambda_down must be positive, got {}",
                self.lambda_down
            )));
        }
        if !(self.lambda_min > 0.0 && self.lambda_min <= self.lambda0 && self.lambda0 <= self.lambda_max)
        {
            return Err(Error::config(format!(
                "damping bracket must satisfy 0 < lambda_min <= lambda0 <= lambda_max, got \
                 [{:e}, {:e}] with lambda0 {:e}",
                self.lambda_min, self.lambda_max, self.lambda0
            )));
        }
        if !(self.target_loss.is_finite() && self.target_loss >= 0.0) {
            return Err(Error::config(format!(
                "target_loss must be finite and non-negative, got {}",
                self.target_loss
            )));
        }
        Ok(())
    }
}

/// One Levenberg-Marquardt iteration (one Jacobian assembly and solve).
#[derive(Debug, Clone, Copy)]
pub struct LmaRecord {
    /// 1-based iteration index.
    pub iter: u64,
    /// Full-dataset loss after this iteration (unchanged if rejected).
    pub loss: f64,
    /// Wall-clock spent in this iteration, milliseconds (monotonic clock;
    /// excluded from determinism guarantees).
    pub wallclock_ms: f64,
    /// Damping used for this iteration's solve.
    pub lambda: f64,
    /// Whether the proposed step was taken.
    pub accepted: bool,
}

/// Result of a Levenberg-Marquardt solve.
#[derive(Debug, Clone)]
pub struct LmaOutcome {
    /// Per-iteration trajectory, in order.
    pub records: Vec<LmaRecord>,
    /// Parameters after the final iteration.
    pub final_params: Vec<f64>,
    /// Full-dataset loss at `final_params`.
    pub final_loss: f64,
    /// Whether `target_loss` was reached within the budget.
    pub converged: bool,
}

impl LmaOutcome {
    /// Number of iterations performed (accepted and rejected).
    pub fn iterations(&self) -> u64 {
        self.records.len() as u64
    }
}

/// Scaled residual vector `rho` (length `n * rows`, `||rho||^2` = mean loss)
/// and its Jacobian with respect to the flat parameters, assembled sample by
/// sample from the bilinear structure: for sample `x` and output row `p`,
/// `d rho / d W1[p, k] = (W2 x)_k / sqrt(n)` and
/// `d rho / d W2[k, c] = W1[p, k] x_c / sqrt(n)`.
fn residuals_and_jacobian(prob: &ConditionedRegression, params: &[f64]) -> (Vec<f64>, Matrix) {
    let (rows, cols, inner) = (prob.rows(), prob.cols(), prob.inner());
    let n = prob.num_samples();
    let p_count = prob.param_count();
    let inv_sqrt_n = (n as f64).sqrt().recip();

    let w1 = Matrix::from_vec(rows, inner, params[..rows * inner].to_vec());
    let w2 = Matrix::from_vec(inner, cols, params[rows * inner..].to_vec());
    let mut m = w1.matmul(&w2);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] -= prob.matrix()[(i, j)];
        }
    }

    let mut rho = vec![0.0; n * rows];
    let mut jac = Matrix::zeros(n * rows, p_count);
    let w2_offset = rows * inner;
    for s in 0..n {
        let x = prob.samples().column(s);
        let r = m.matvec(&x);
        let w2x = w2.matvec(&x);
        for p in 0..rows {
            let row = s * rows + p;
            rho[row] = r[p] * inv_sqrt_n;
            let jrow = jac.data_mut();
            let base = row * p_count;
            for k in 0..inner {
                jrow[base + p * inner + k] = w2x[k] * inv_sqrt_n;
            }
            for k in 0..inner {
                let w1pk = w1[(p, k)] * inv_sqrt_n;
                for c in 0..cols {
                    jrow[base + w2_offset + k * cols + c] = w1pk * x[c];
                }
            }
        }
    }
    (rho, jac)
}

/// Solve `(JᵀJ + lambda I) delta = Jᵀ rho` by Cholesky; `None` signals a
/// factorization failure (not numerically positive definite at this
/// damping), which the caller treats like a rejected step.
fn solve_damped(jtj: &Matrix, jtr: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let p = jtr.len();
    let mut a = DMatrix::<f64>::from_row_slice(p, p, jtj.data());
    for i in 0..p {
        a[(i, i)] += lambda;
    }
    let chol = Cholesky::new(a)?;
    let delta = chol.solve(&DVector::from_column_slice(jtr));
    Some(delta.iter().copied().collect())
}

/// Run Levenberg-Marquardt from the seeded standard initialization.
pub fn lma_solve(
    prob: &ConditionedRegression,
    config: &LmaConfig,
    seed: Seed,
) -> Result<LmaOutcome> {
    lma_solve_from(prob, config, prob.init_params(seed))
}

/// Run Levenberg-Marquardt from explicit initial parameters.
pub fn lma_solve_from(
    prob: &ConditionedRegression,
    config: &LmaConfig,
    params: Vec<f64>,
) -> Result<LmaOutcome> {
    config.validate()?;
    assert_eq!(
        params.len(),
        prob.param_count(),
        "lma: expected {} parameters, got {}",
        prob.param_count(),
        params.len()
    );

    let mut params = params;
    let mut loss = prob.full_loss(&params)?;
    let mut lambda = config.lambda0;
    let mut records = Vec::new();

    for iter in 1..=config.max_iters {
        if loss < config.target_loss {
            break;
        }
        let start = Instant::now();

        let (rho, jac) = residuals_and_jacobian(prob, &params);
        let jtj = jac.transpose_matmul(&jac);
        let rho_mat = Matrix::from_vec(rho.len(), 1, rho);
        let jtr_mat = jac.transpose_matmul(&rho_mat);
        let jtr = jtr_mat.data();

        // One solve per iteration: an improving proposal is accepted and
        // relaxes the damping; a failed factorization or a non-improving
        // proposal rejects the iteration and escalates it.
        let mut accepted = false;
        if let Some(delta) = solve_damped(&jtj, jtr, lambda) {
            let candidate: Vec<f64> = params
                .iter()
                .zip(&delta)
                .map(|(t, d)| t - config.alpha * d)
                .collect();
            if let Ok(candidate_loss) = prob.full_loss(&candidate) {
                if candidate_loss < loss {
                    params = candidate;
                    loss = candidate_loss;
                    accepted = true;
                }
            }
        }
        if accepted {
            lambda = (lambda * config.lambda_down).max(config.lambda_min);
        } else {
            let escalated = lambda * config.lambda_up;
            if escalated > config.lambda_max {
                return Err(Error::DampingExhausted {
                    lambda: escalated,
                    lo: config.lambda_min,
                    hi: config.lambda_max,
                    iteration: iter,
                    loss,
                });
            }
            lambda = escalated;
        }

        records.push(LmaRecord {
            iter,
            loss,
            wallclock_ms: start.elapsed().as_secs_f64() * 1e3,
            lambda,
            accepted,
        });
    }

    let converged = loss < config.target_loss;
    Ok(LmaOutcome {
        records,
        final_params: params,
        final_loss: loss,
        converged,
    })
}
