//! Experiment harness: TOML-configured, seeded, multi-restart optimization
//! runs with per-step CSV metrics and machine-readable JSON summaries.
//!
//! The harness wires together a problem ([`ProblemSpec`]), an optimizer
//! ([`OptimizerSpec`]), and a run budget ([`RunSpec`]) and executes them
//! reproducibly: restart `k` uses seed `seed_base + k`, from which the
//! parameter-init and batch-shuffle streams are derived independently.
//! Every optimizer sharing a restart seed therefore starts from identical
//! parameters, which is what makes cross-optimizer comparisons fair.

mod config;
mod runner;

pub use config::{
    BuiltProblem, DataSource, ExperimentSpec, OptimizerKind, OptimizerSpec, ProblemKind,
    ProblemSpec, RunSpec, MNIST_IMAGES_FILE, MNIST_LABELS_FILE,
};
pub use runner::{
    compare, default_lr_grid, run, sweep_batch_size, ComparisonRow, ComparisonTable,
    ExperimentSummary, RunSummary, TrajectorySummary,
};
