//! Declarative experiment configuration.
//!
//! An experiment is one problem, one optimizer, and a run section, loaded
//! from a TOML file with three tables (`[problem]`, `[optimizer]`, `[run]`).
//! The structures are deliberately flat — a `kind` string plus optional
//! fields — so that validation can point at the exact offending key instead
//! of a deserializer backtrace. Unknown keys are rejected outright.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineConfig;
use crate::data_io::{load_idx, synthetic_classification};
use crate::error::{Error, Result};
use crate::l4::L4Config;
use crate::lma::LmaConfig;
use crate::numerics::Seed;
use crate::problems::{ConditionedRegression, MlpProblem, Problem};

/// Default condition number of the regression target.
const DEFAULT_KAPPA: f64 = 1e10;
/// Default seed for problem/dataset construction (shared by all restarts;
/// restart seeds only vary the initialization and batch order).
const DEFAULT_DATA_SEED: u64 = 0x5EED_DA7A;
/// Synthetic-dataset defaults mirror the MNIST subset shape.
const DEFAULT_SYNTH_N: usize = 1000;
const DEFAULT_SYNTH_FEATURES: usize = 784;
const DEFAULT_SYNTH_CLASSES: usize = 10;
/// MNIST training-set file names searched for under `data_dir`.
pub const MNIST_IMAGES_FILE: &str = "train-images-idx3-ubyte";
pub const MNIST_LABELS_FILE: &str = "train-labels-idx1-ubyte";

// ======================================================================
// Spec structures
// ======================================================================

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub problem: ProblemSpec,
    pub optimizer: OptimizerSpec,
    pub run: RunSpec,
}

/// Which objective to optimize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// `"regression"`, `"mnist"`, or `"synthetic"`.
    pub kind: String,
    /// Condition number of the regression target (default 1e10).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Regression size: `"1x"` (96 parameters) or `"2x"` (192 parameters).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<String>,
    /// Mini-batch size; required for the stochastic problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    /// Directory holding the MNIST IDX files (default `data`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    /// Keep only the first `subset` samples of the loaded dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<usize>,
    /// Synthetic dataset: sample count (default 1000).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Synthetic dataset: feature dimension (default 784).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<usize>,
    /// Synthetic dataset: class count (default 10).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    /// Seed for problem construction, shared across restarts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_seed: Option<u64>,
}

/// Which optimizer drives the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    /// `"l4mom"`, `"l4adam"`, `"sgd"`, `"momentum"`, `"adam"`, or `"lma"`.
    pub kind: String,
    /// Loss-fraction stepsize of the L4 optimizers, or the step fraction of
    /// the Levenberg-Marquardt solver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Learning rate of the baseline optimizers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    /// L4: fraction of the tracked minimum loss aimed at per step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// L4: fraction of the first loss used to initialize the minimum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    /// L4: forgetting timescale of the tracked minimum loss.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// L4: additive guard in the stepsize denominator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// L4: momentum averaging timescale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_m: Option<f64>,
    /// L4: second-moment averaging timescale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_s: Option<f64>,
    /// Momentum baseline: accumulation factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Momentum baseline: use the `(1 - beta)`-damped accumulation form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dampened: Option<bool>,
    /// Adam baseline: first-moment decay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    /// Adam baseline: second-moment decay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
}

/// Budget, restarts, and stopping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Independent runs with seeds `seed_base .. seed_base + restarts`.
    #[serde(default = "default_restarts")]
    pub restarts: u64,
    /// Update budget (for LMA: iteration budget).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    /// Epoch budget for the stochastic problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_epochs: Option<u64>,
    /// First restart seed.
    #[serde(default)]
    pub seed_base: u64,
    /// Stop a run once the monitored loss drops below this (full-dataset
    /// loss for the deterministic regression, batch loss otherwise).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_loss: Option<f64>,
    /// Log every k-th step (default: 1 for regression and LMA, 10 for the
    /// stochastic problems).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_every: Option<u64>,
}

fn default_restarts() -> u64 {
    1
}

// ======================================================================
// Resolved enums
// ======================================================================

/// Parsed `problem.kind`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Regression,
    Mnist,
    Synthetic,
}

/// Parsed `optimizer.kind`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    L4Mom,
    L4Adam,
    Sgd,
    Momentum,
    Adam,
    Lma,
}

impl OptimizerKind {
    /// The configuration string naming this optimizer.
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::L4Mom => "l4mom",
            OptimizerKind::L4Adam => "l4adam",
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Momentum => "momentum",
            OptimizerKind::Adam => "adam",
            OptimizerKind::Lma => "lma",
        }
    }
}

/// A constructed problem instance together with its batching mode.
pub enum BuiltProblem {
    Regression(ConditionedRegression),
    Mlp(MlpProblem),
}

impl BuiltProblem {
    /// The trait-object view used by the run loop.
    pub fn as_problem(&self) -> &dyn Problem {
        match self {
            BuiltProblem::Regression(p) => p,
            BuiltProblem::Mlp(p) => p,
        }
    }

    /// The regression instance, if this is one.
    pub fn as_regression(&self) -> Option<&ConditionedRegression> {
        match self {
            BuiltProblem::Regression(p) => Some(p),
            BuiltProblem::Mlp(_) => None,
        }
    }

    /// The classifier problem, if this is one.
    pub fn as_mlp(&self) -> Option<&MlpProblem> {
        match self {
            BuiltProblem::Regression(_) => None,
            BuiltProblem::Mlp(p) => Some(p),
        }
    }
}

/// Where the classification data came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    MnistFiles,
    SyntheticFallback,
    Synthetic,
}

impl DataSource {
    /// Stable string recorded in summaries.
    pub fn name(self) -> &'static str {
        match self {
            DataSource::MnistFiles => "mnist-idx",
            DataSource::SyntheticFallback => "synthetic-fallback",
            DataSource::Synthetic => "synthetic",
        }
    }
}

// ======================================================================
// Loading & validation
// ======================================================================

impl ExperimentSpec {
    /// Parse and validate a TOML experiment description.
    pub fn from_toml_str(text: &str) -> Result<ExperimentSpec> {
        let spec: ExperimentSpec = toml::from_str(text)
            .map_err(|e| Error::config(format!("config parse error: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Load a TOML experiment file.
    pub fn from_toml_file(path: &Path) -> Result<ExperimentSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::InvalidConfig { message } => Error::InvalidConfig {
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })
    }

    /// Check every cross-field rule; called by every entry point that
    /// consumes a spec.
    pub fn validate(&self) -> Result<()> {
        let problem = self.problem.kind_enum()?;
        let optimizer = self.optimizer.kind_enum()?;
        self.problem.validate(problem)?;
        self.optimizer.validate(optimizer)?;
        self.run.validate(problem, optimizer)?;
        if optimizer == OptimizerKind::Lma && problem != ProblemKind::Regression {
            return Err(Error::config(
                "lma only supports the regression problem".to_string(),
            ));
        }
        Ok(())
    }

    /// Effective logging cadence.
    pub fn log_every(&self) -> u64 {
        self.run.log_every.unwrap_or_else(|| {
            match self.problem.kind_enum().expect("validated") {
                ProblemKind::Regression => 1,
                ProblemKind::Mnist | ProblemKind::Synthetic => 10,
            }
        })
    }
}

impl ProblemSpec {
    /// A deterministic regression problem spec with defaults.
    pub fn regression() -> ProblemSpec {
        ProblemSpec {
            kind: "regression".into(),
            kappa: None,
            scale: None,
            batch_size: None,
            data_dir: None,
            subset: None,
            n: None,
            features: None,
            classes: None,
            data_seed: None,
        }
    }

    /// A synthetic classification problem spec with the given batch size.
    pub fn synthetic(batch_size: usize) -> ProblemSpec {
        ProblemSpec {
            kind: "synthetic".into(),
            batch_size: Some(batch_size),
            ..ProblemSpec::regression()
        }
    }

    /// Parse `kind`.
    pub fn kind_enum(&self) -> Result<ProblemKind> {
        match self.kind.as_str() {
            "regression" => Ok(ProblemKind::Regression),
            "mnist" => Ok(ProblemKind::Mnist),
            "synthetic" => Ok(ProblemKind::Synthetic),
            other => Err(Error::config(format!(
                "unknown problem.kind {other:?} (expected regression, mnist, or synthetic)"
            ))),
        }
    }

    /// Whether batches are drawn from a shuffled dataset.
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self.kind_enum(),
            Ok(ProblemKind::Mnist | ProblemKind::Synthetic)
        )
    }

    /// Problem-construction seed.
    pub fn data_seed(&self) -> Seed {
        Seed(self.data_seed.unwrap_or(DEFAULT_DATA_SEED))
    }

    fn validate(&self, kind: ProblemKind) -> Result<()> {
        let forbid = |name: &str, set: bool| -> Result<()> {
            if set {
                Err(Error::config(format!(
                    "problem.{name} does not apply to problem.kind {:?}",
                    self.kind
                )))
            } else {
                Ok(())
            }
        };
        match kind {
            ProblemKind::Regression => {
                forbid("batch_size", self.batch_size.is_some())?;
                forbid("data_dir", self.data_dir.is_some())?;
                forbid("subset", self.subset.is_some())?;
                forbid("n", self.n.is_some())?;
                forbid("features", self.features.is_some())?;
                forbid("classes", self.classes.is_some())?;
                if let Some(kappa) = self.kappa {
                    if !(kappa.is_finite() && kappa >= 1.0) {
                        return Err(Error::config(format!(
                            "problem.kappa must be finite and >= 1, got {kappa}"
                        )));
                    }
                }
                match self.scale.as_deref() {
                    None | Some("1x") | Some("2x") => {}
                    Some(other) => {
                        return Err(Error::config(format!(
                            "problem.scale must be \"1x\" or \"2x\", got {other:?}"
                        )))
                    }
                }
            }
            ProblemKind::Mnist | ProblemKind::Synthetic => {
                forbid("kappa", self.kappa.is_some())?;
                forbid("scale", self.scale.is_some())?;
                match self.batch_size {
                    Some(b) if b >= 1 => {}
                    Some(_) => {
                        return Err(Error::config(
                            "problem.batch_size must be at least 1".to_string(),
                        ))
                    }
                    None => {
                        return Err(Error::config(format!(
                            "problem.batch_size is required for problem.kind {:?}",
                            self.kind
                        )))
                    }
                }
                if kind == ProblemKind::Mnist {
                    forbid("n", self.n.is_some())?;
                    forbid("features", self.features.is_some())?;
                    forbid("classes", self.classes.is_some())?;
                } else {
                    forbid("data_dir", self.data_dir.is_some())?;
                    if self.classes.is_some_and(|c| c < 2) {
                        return Err(Error::config(
                            "problem.classes must be at least 2".to_string(),
                        ));
                    }
                    if self.n.is_some_and(|n| n == 0) || self.features.is_some_and(|d| d == 0) {
                        return Err(Error::config(
                            "problem.n and problem.features must be positive".to_string(),
                        ));
                    }
                }
                if self.subset.is_some_and(|s| s == 0) {
                    return Err(Error::config(
                        "problem.subset must be at least 1".to_string(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Construct the problem instance (loading or generating data).
    ///
    /// For `kind = "mnist"`, missing IDX files fall back to a synthetic
    /// dataset of the same shape — recorded in the returned [`DataSource`]
    /// so callers can tell the user; corrupt files are reported as errors.
    pub fn build(&self) -> Result<(BuiltProblem, DataSource)> {
        match self.kind_enum()? {
            ProblemKind::Regression => {
                let kappa = self.kappa.unwrap_or(DEFAULT_KAPPA);
                let seed = self.data_seed();
                let prob = match self.scale.as_deref() {
                    Some("2x") => ConditionedRegression::scaled_up(kappa, seed),
                    _ => ConditionedRegression::new(kappa, seed),
                };
                Ok((BuiltProblem::Regression(prob), DataSource::Synthetic))
            }
            ProblemKind::Mnist => {
                let dir = self
                    .data_dir
                    .clone()
                    .unwrap_or_else(|| PathBuf::from("data"));
                let images = dir.join(MNIST_IMAGES_FILE);
                let labels = dir.join(MNIST_LABELS_FILE);
                let (data, source) = if images.is_file() && labels.is_file() {
                    (load_idx(&images, &labels)?, DataSource::MnistFiles)
                } else {
                    let n = self.subset.unwrap_or(DEFAULT_SYNTH_N);
                    (
                        synthetic_classification(
                            self.data_seed(),
                            n,
                            DEFAULT_SYNTH_FEATURES,
                            DEFAULT_SYNTH_CLASSES,
                        ),
                        DataSource::SyntheticFallback,
                    )
                };
                let data = match self.subset {
                    Some(k) if k < data.n() => data.truncated(k),
                    Some(k) if k > data.n() => {
                        return Err(Error::config(format!(
                            "problem.subset {k} exceeds the dataset size {}",
                            data.n()
                        )))
                    }
                    _ => data,
                };
                Ok((BuiltProblem::Mlp(MlpProblem::standard(data)), source))
            }
            ProblemKind::Synthetic => {
                let n = self.n.unwrap_or(DEFAULT_SYNTH_N);
                let data = synthetic_classification(
                    self.data_seed(),
                    n,
                    self.features.unwrap_or(DEFAULT_SYNTH_FEATURES),
                    self.classes.unwrap_or(DEFAULT_SYNTH_CLASSES),
                );
                let data = match self.subset {
                    Some(k) if k < data.n() => data.truncated(k),
                    Some(k) if k > data.n() => {
                        return Err(Error::config(format!(
                            "problem.subset {k} exceeds problem.n {n}"
                        )))
                    }
                    _ => data,
                };
                Ok((BuiltProblem::Mlp(MlpProblem::standard(data)), DataSource::Synthetic))
            }
        }
    }
}

impl OptimizerSpec {
    /// An L4 optimizer spec of the given flavor with default settings.
    pub fn l4(kind: &str) -> OptimizerSpec {
        OptimizerSpec {
            kind: kind.into(),
            alpha: None,
            lr: None,
            gamma: None,
            gamma0: None,
            tau: None,
            epsilon: None,
            tau_m: None,
            tau_s: None,
            beta: None,
            dampened: None,
            beta1: None,
            beta2: None,
        }
    }

    /// A baseline optimizer spec with the given learning rate.
    pub fn baseline(kind: &str, lr: f64) -> OptimizerSpec {
        OptimizerSpec {
            lr: Some(lr),
            ..OptimizerSpec::l4(kind)
        }
    }

    /// Parse `kind`.
    pub fn kind_enum(&self) -> Result<OptimizerKind> {
        match self.kind.as_str() {
            "l4mom" => Ok(OptimizerKind::L4Mom),
            "l4adam" => Ok(OptimizerKind::L4Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            "momentum" => Ok(OptimizerKind::Momentum),
            "adam" => Ok(OptimizerKind::Adam),
            "lma" => Ok(OptimizerKind::Lma),
            other => Err(Error::config(format!(
                "unknown optimizer.kind {other:?} \
                 (expected l4mom, l4adam, sgd, momentum, adam, or lma)"
            ))),
        }
    }

    fn validate(&self, kind: OptimizerKind) -> Result<()> {
        let forbid = |name: &str, set: bool| -> Result<()> {
            if set {
                Err(Error::config(format!(
                    "optimizer.{name} does not apply to optimizer.kind {:?}",
                    self.kind
                )))
            } else {
                Ok(())
            }
        };
        let l4_fields = self.gamma.is_some()
            || self.gamma0.is_some()
            || self.tau.is_some()
            || self.epsilon.is_some()
            || self.tau_m.is_some()
            || self.tau_s.is_some();
        match kind {
            OptimizerKind::L4Mom | OptimizerKind::L4Adam => {
                forbid("lr", self.lr.is_some())?;
                forbid("beta", self.beta.is_some())?;
                forbid("dampened", self.dampened.is_some())?;
                forbid("beta1", self.beta1.is_some())?;
                forbid("beta2", self.beta2.is_some())?;
                self.build_l4(kind)?.validate()?;
            }
            OptimizerKind::Lma => {
                forbid("lr", self.lr.is_some())?;
                forbid("l4 settings (gamma/gamma0/tau/epsilon/tau_m/tau_s)", l4_fields)?;
                forbid("beta", self.beta.is_some())?;
                forbid("dampened", self.dampened.is_some())?;
                forbid("beta1", self.beta1.is_some())?;
                forbid("beta2", self.beta2.is_some())?;
                self.build_lma(1, None)?.validate()?;
            }
            OptimizerKind::Sgd | OptimizerKind::Momentum | OptimizerKind::Adam => {
                forbid("alpha", self.alpha.is_some())?;
                forbid("l4 settings (gamma/gamma0/tau/epsilon/tau_m/tau_s)", l4_fields)?;
                if kind != OptimizerKind::Momentum {
                    forbid("beta", self.beta.is_some())?;
                    forbid("dampened", self.dampened.is_some())?;
                }
                if kind != OptimizerKind::Adam {
                    forbid("beta1", self.beta1.is_some())?;
                    forbid("beta2", self.beta2.is_some())?;
                }
                if self.lr.is_none() {
                    return Err(Error::config(format!(
                        "optimizer.lr is required for optimizer.kind {:?}",
                        self.kind
                    )));
                }
                self.build_baseline(kind)?.validate()?;
            }
        }
        Ok(())
    }

    /// Resolve the L4 configuration (panics if `kind` is not an L4 flavor).
    pub fn build_l4(&self, kind: OptimizerKind) -> Result<L4Config> {
        let mut config = match kind {
            OptimizerKind::L4Mom => L4Config::mom(),
            OptimizerKind::L4Adam => L4Config::adam(),
            other => panic!("build_l4 called for {other:?}"),
        };
        if let Some(alpha) = self.alpha {
            config.alpha = alpha;
        }
        if let Some(gamma) = self.gamma {
            config.gamma = gamma;
        }
        if let Some(gamma0) = self.gamma0 {
            config.gamma0 = gamma0;
        }
        if let Some(tau) = self.tau {
            config.tau = tau;
        }
        if let Some(epsilon) = self.epsilon {
            config.epsilon = epsilon;
        }
        if let Some(tau_m) = self.tau_m {
            config.tau_m = tau_m;
        }
        if let Some(tau_s) = self.tau_s {
            config.tau_s = tau_s;
        }
        Ok(config)
    }

    /// Resolve the baseline configuration (panics for non-baseline kinds).
    pub fn build_baseline(&self, kind: OptimizerKind) -> Result<BaselineConfig> {
        let lr = self
            .lr
            .ok_or_else(|| Error::config("optimizer.lr is required".to_string()))?;
        Ok(match kind {
            OptimizerKind::Sgd => BaselineConfig::sgd(lr),
            OptimizerKind::Momentum => {
                let mut config = BaselineConfig::momentum(lr);
                if let BaselineConfig::Momentum { beta, dampened, .. } = &mut config {
                    if let Some(b) = self.beta {
                        *beta = b;
                    }
                    if let Some(d) = self.dampened {
                        *dampened = d;
                    }
                }
                config
            }
            OptimizerKind::Adam => {
                let mut config = BaselineConfig::adam(lr);
                if let BaselineConfig::Adam { beta1, beta2, .. } = &mut config {
                    if let Some(b) = self.beta1 {
                        *beta1 = b;
                    }
                    if let Some(b) = self.beta2 {
                        *beta2 = b;
                    }
                }
                config
            }
            other => panic!("build_baseline called for {other:?}"),
        })
    }

    /// Resolve the Levenberg-Marquardt configuration for a given iteration
    /// budget and optional stop loss.
    pub fn build_lma(&self, max_iters: u64, stop_loss: Option<f64>) -> Result<LmaConfig> {
        let mut config = LmaConfig {
            max_iters,
            ..LmaConfig::default()
        };
        if let Some(alpha) = self.alpha {
            config.alpha = alpha;
        }
        if let Some(target) = stop_loss {
            config.target_loss = target;
        }
        Ok(config)
    }
}

impl RunSpec {
    /// A single-run spec with a step budget.
    pub fn steps(max_steps: u64) -> RunSpec {
        RunSpec {
            restarts: 1,
            max_steps: Some(max_steps),
            max_epochs: None,
            seed_base: 0,
            stop_loss: None,
            log_every: None,
        }
    }

    fn validate(&self, problem: ProblemKind, optimizer: OptimizerKind) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::config("run.restarts must be at least 1".to_string()));
        }
        match (self.max_steps, self.max_epochs) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "run.max_steps and run.max_epochs are mutually exclusive".to_string(),
                ))
            }
            (None, None) => {
                return Err(Error::config(
                    "one of run.max_steps or run.max_epochs is required".to_string(),
                ))
            }
            _ => {}
        }
        if self.max_epochs.is_some() && problem == ProblemKind::Regression {
            return Err(Error::config(
                "run.max_epochs does not apply to the deterministic regression; \
                 use run.max_steps"
                    .to_string(),
            ));
        }
        if optimizer == OptimizerKind::Lma && self.max_steps.is_none() {
            return Err(Error::config(
                "lma needs run.max_steps as its iteration budget".to_string(),
            ));
        }
        if let Some(stop) = self.stop_loss {
            if !(stop.is_finite() && stop >= 0.0) {
                return Err(Error::config(format!(
                    "run.stop_loss must be finite and non-negative, got {stop}"
                )));
            }
        }
        if self.log_every == Some(0) {
            return Err(Error::config("run.log_every must be at least 1".to_string()));
        }
        Ok(())
    }

    /// Total update budget given the per-epoch step count.
    pub fn step_budget(&self, steps_per_epoch: u64) -> u64 {
        match (self.max_steps, self.max_epochs) {
            (Some(steps), _) => steps,
            (None, Some(epochs)) => epochs * steps_per_epoch,
            (None, None) => unreachable!("validated: one budget field is set"),
        }
    }
}
