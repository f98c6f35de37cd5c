//! Differentiable benchmark objectives with analytic gradients.
//!
//! Two problems are provided: an ill-conditioned bilinear regression
//! ([`ConditionedRegression`]) and a small ReLU MLP classifier
//! ([`MlpClassifier`] / [`MlpProblem`]). Both expose batched loss and
//! gradient with respect to a flat parameter vector through the [`Problem`]
//! trait, so optimizers and the experiment harness stay agnostic of the
//! objective.
//!
//! Problem data is immutable after construction and evaluation is a pure
//! function of `(params, batch)`, so instances can be shared freely.

mod mlp;
mod regression;

pub use mlp::{MlpClassifier, MlpProblem};
pub use regression::ConditionedRegression;

use crate::error::Result;
use crate::numerics::Seed;

/// Which samples a loss evaluation averages over.
#[derive(Debug, Clone, Copy)]
pub enum Batch<'a> {
    /// The whole fixed dataset.
    All,
    /// The listed sample indices (duplicates allowed; the mean runs over the
    /// list, not the distinct set).
    Indices(&'a [usize]),
}

/// A differentiable objective: batched loss plus analytic gradient with
/// respect to a flat parameter vector.
pub trait Problem {
    /// Length of the flat parameter vector.
    fn param_count(&self) -> usize;

    /// Number of samples in the fixed dataset.
    fn num_samples(&self) -> usize;

    /// Seeded initial parameter vector.
    fn init_params(&self, seed: Seed) -> Vec<f64>;

    /// Mean loss over `batch` and its gradient; `grad.len() == param_count()`.
    ///
    /// Losses are non-negative and finite for finite parameters; non-finite
    /// inputs or intermediates surface as divergence-style errors rather
    /// than poisoning downstream state.
    fn loss_grad(&self, params: &[f64], batch: Batch) -> Result<(f64, Vec<f64>)>;

    /// Deterministic whole-dataset loss, for monitoring and stop criteria.
    fn full_loss(&self, params: &[f64]) -> Result<f64> {
        self.loss_grad(params, Batch::All).map(|(loss, _)| loss)
    }
}
