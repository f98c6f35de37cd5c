//! Loss-based stepsize adaptation (L4) for gradient methods, together with
//! everything needed to benchmark it: classical baselines (SGD, momentum,
//! Adam), a damped least-squares reference solver, an ill-conditioned
//! regression problem, a small MLP classifier, IDX/CSV data handling, and a
//! deterministic experiment harness with a CLI front end.
//!
//! The L4 rule turns a momentum or Adam update direction `v` into a step
//! `-eta * v` with `eta = alpha * (L - gamma * L_min) / (g.v + epsilon)`,
//! i.e. the stepsize that would close a fraction `alpha` of the gap between
//! the current loss `L` and a running estimate `L_min` of the attainable
//! minimum, under a linear model of the loss. All state updates are
//! deterministic given a seed; every float is an `f64`.

pub mod averaging;
pub mod baselines;
pub mod data_io;
pub mod directions;
pub mod error;
pub mod harness;
pub mod l4;
pub mod lma;
pub mod numerics;
pub mod problems;

pub use error::{Error, Result};
