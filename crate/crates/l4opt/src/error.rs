//! Error type shared across the crate.
//!
//! Shape and length mismatches are programmer errors and panic via `assert!`;
//! everything that can go wrong with runtime data (divergence, malformed
//! files, bad configs) is reported through [`Error`].

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Runtime failures: numerical divergence, malformed inputs, bad configs.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A loss, gradient, or parameter vector stopped being finite.
    ///
    /// `step` is the 1-based update index at which the blow-up was detected
    /// and `last_finite_loss` the most recent loss value that was still
    /// finite, so a harness can report where a run died.
    #[error("non-finite {quantity} at step {step} (last finite loss {last_finite_loss:e})")]
    Diverged {
        quantity: &'static str,
        step: u64,
        last_finite_loss: f64,
    },

    /// A loss fed to an optimizer was negative or otherwise unusable.
    #[error("loss must be finite and non-negative, got {loss}")]
    InvalidLoss { loss: f64 },

    /// A non-finite value reached a state update outside of a counted step.
    #[error("non-finite {what}")]
    NonFinite { what: &'static str },

    /// A configuration value violates its documented range.
    #[error("invalid configuration: {message}")]
    InvalidConfig { message: String },

    /// The damping parameter left its allowed bracket without an acceptable
    /// step; carries the diagnostics needed to debug the failure.
    #[error(
        "damping lambda {lambda:e} left the bracket [{lo:e}, {hi:e}] at iteration {iteration} \
         (loss {loss:e})"
    )]
    DampingExhausted {
        lambda: f64,
        lo: f64,
        hi: f64,
        iteration: u64,
        loss: f64,
    },

    /// A binary dataset file could not be parsed; names the offending field
    /// and the byte offset where parsing stopped.
    #[error("{path}: bad {field} at byte {offset}: {message}", path = path.display())]
    DatasetParse {
        path: PathBuf,
        field: &'static str,
        offset: u64,
        message: String,
    },

    /// A metrics CSV line could not be parsed back.
    #[error("metrics line {line}: {message}")]
    MetricsParse { line: usize, message: String },

    /// An I/O error, annotated with the path involved.
    #[error("{path}: {source}", path = path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Convenience constructor for [`Error::InvalidConfig`].
    pub fn config(message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            message: message.into(),
        }
    }

    /// Attach a path to a raw I/O error.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
