//! Experiment execution: seeded multi-restart runs, batch-size sweeps, and
//! optimizer comparison tables.
//!
//! Every restart is fully isolated — fresh parameters, fresh optimizer
//! state, fresh batch order — and runs sequentially, so outputs are
//! bit-reproducible for a given spec and seed. Wall-clock columns are the
//! only exception: they come from a monotonic clock and are explicitly
//! excluded from the determinism guarantee.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineConfig, BaselineState};
use crate::data_io::{MetricsRow, MetricsWriter};
use crate::error::{Error, Result};
use crate::harness::config::{BuiltProblem, ExperimentSpec, OptimizerKind};
use crate::l4::{L4Config, L4State};
use crate::lma::lma_solve;
use crate::numerics::Seed;
use crate::problems::Batch;

/// Sub-seed tag for parameter initialization (shared by every optimizer, so
/// runs with equal restart seeds start from identical parameters).
const TAG_PARAMS: u64 = 1;
/// Sub-seed tag for the epoch shuffler.
const TAG_SHUFFLE: u64 = 2;

// ======================================================================
// Summaries
// ======================================================================

/// Outcome of one restart.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    /// `{optimizer}-s{seed}`; also the metrics CSV stem.
    pub run_id: String,
    /// Restart seed.
    pub seed: u64,
    /// Full-dataset loss at the final parameters (last finite monitored
    /// loss if the run diverged).
    pub final_loss: f64,
    /// Update count after which the monitored loss first dropped below
    /// `stop_loss` (checked before each update; 0 means the initial loss
    /// already qualified), if it ever did.
    pub steps_to_target: Option<u64>,
    /// Whether the run died with a non-finite quantity (or, for the
    /// Levenberg-Marquardt solver, exhausted its damping bracket).
    pub diverged: bool,
    /// Update index at which divergence was detected.
    pub divergence_step: Option<u64>,
    /// Human-readable divergence reason.
    pub divergence_reason: Option<String>,
    /// Smallest `g.v` seen by an L4 optimizer over the run.
    pub min_gv: Option<f64>,
    /// Whole-dataset classification accuracy at the final parameters
    /// (classifier problems, non-diverged runs only).
    pub final_accuracy: Option<f64>,
    /// Updates actually performed.
    pub steps_run: u64,
    /// Mini-batch size (stochastic problems only).
    pub batch_size: Option<u64>,
    /// Total samples consumed, for batch-size-normalized comparisons.
    pub samples_processed: Option<u64>,
}

/// Restart-aggregated loss trajectory on the common logged step grid
/// (truncated to the shortest restart).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub steps: Vec<u64>,
    /// Log-space mean: `exp(mean(ln loss))` per grid point.
    pub geo_mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Everything `run` produces besides the per-run CSV files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    /// Problem kind string from the experiment config.
    pub problem: String,
    /// Optimizer kind string from the experiment config.
    pub optimizer: String,
    /// Where classification data came from (`mnist-idx`,
    /// `synthetic-fallback`, or `synthetic`).
    pub data_source: String,
    pub runs: Vec<RunSummary>,
    pub trajectory: TrajectorySummary,
    /// Per-restart wall-clock in milliseconds. Kept out of the serialized
    /// summary so `summary.json` is bit-deterministic.
    #[serde(skip, default)]
    pub run_wallclock_ms: Vec<f64>,
}

struct SingleOutcome {
    summary: RunSummary,
    wallclock_ms: f64,
    /// `(step, monitored loss)` at each logged step.
    logged: Vec<(u64, f64)>,
}

// ======================================================================
// run
// ======================================================================

/// Execute `restarts` independent seeded runs of `spec`, writing one
/// metrics CSV per run plus a `summary.json` into `out_dir`.
///
/// A diverging run is recorded in its summary (step index and reason) and
/// does not abort the remaining restarts.
pub fn run(spec: &ExperimentSpec, out_dir: &Path) -> Result<ExperimentSummary> {
    spec.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let (built, data_source) = spec.problem.build()?;

    let mut runs = Vec::new();
    let mut wallclocks = Vec::new();
    let mut trajectories = Vec::new();
    for r in 0..spec.run.restarts {
        let seed = spec.run.seed_base + r;
        let single = run_single(spec, &built, seed, out_dir)?;
        runs.push(single.summary);
        wallclocks.push(single.wallclock_ms);
        trajectories.push(single.logged);
    }

    let summary = ExperimentSummary {
        problem: spec.problem.kind.clone(),
        optimizer: spec.optimizer.kind.clone(),
        data_source: data_source.name().to_string(),
        runs,
        trajectory: aggregate_trajectories(&trajectories),
        run_wallclock_ms: wallclocks,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    let path = out_dir.join("summary.json");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

fn run_single(
    spec: &ExperimentSpec,
    built: &BuiltProblem,
    seed: u64,
    out_dir: &Path,
) -> Result<SingleOutcome> {
    match spec.optimizer.kind_enum()? {
        OptimizerKind::Lma => run_lma(spec, built, seed, out_dir),
        _ => run_first_order(spec, built, seed, out_dir),
    }
}

enum OptimizerState {
    L4 {
        config: L4Config,
        state: Option<L4State>,
    },
    Baseline {
        config: BaselineConfig,
        state: BaselineState,
    },
}

/// Replace the NaN placeholder in loss-blind optimizer divergence errors
/// with the last loss the harness saw, and map any other failure onto the
/// update index it occurred at.
fn divergence_info(e: Error, update_index: u64, last_finite: f64) -> (u64, String) {
    match e {
        Error::Diverged {
            quantity,
            step,
            last_finite_loss,
        } => {
            let enriched = Error::Diverged {
                quantity,
                step,
                last_finite_loss: if last_finite_loss.is_nan() {
                    last_finite
                } else {
                    last_finite_loss
                },
            };
            (step, enriched.to_string())
        }
        other => (update_index, other.to_string()),
    }
}

fn run_first_order(
    spec: &ExperimentSpec,
    built: &BuiltProblem,
    seed: u64,
    out_dir: &Path,
) -> Result<SingleOutcome> {
    let kind = spec.optimizer.kind_enum()?;
    let problem = built.as_problem();
    let run_id = format!("{}-s{seed}", kind.name());
    let mut csv = MetricsWriter::create(out_dir.join(format!("{run_id}.csv")))?;

    let stochastic = spec.problem.is_stochastic();
    let n = problem.num_samples();
    let batch_size = spec.problem.batch_size.unwrap_or(n);
    let steps_per_epoch = n.div_ceil(batch_size) as u64;
    let budget = spec.run.step_budget(steps_per_epoch);
    let log_every = spec.log_every();
    let stop_loss = spec.run.stop_loss;

    let mut params = problem.init_params(Seed(seed).derive(TAG_PARAMS));
    let mut shuffle_rng = Seed(seed).derive(TAG_SHUFFLE).rng();
    let mut optimizer = match kind {
        OptimizerKind::L4Mom | OptimizerKind::L4Adam => OptimizerState::L4 {
            config: spec.optimizer.build_l4(kind)?,
            state: None,
        },
        _ => OptimizerState::Baseline {
            config: spec.optimizer.build_baseline(kind)?,
            state: BaselineState::new(),
        },
    };

    let mut step: u64 = 0;
    let mut epoch: u64 = 0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n; // forces a shuffle before the first batch
    let mut last_finite_loss = f64::NAN;
    let mut min_gv: Option<f64> = None;
    let mut steps_to_target = None;
    let mut diverged = false;
    let mut divergence_step = None;
    let mut divergence_reason = None;
    let mut samples_processed: u64 = 0;
    let mut logged = Vec::new();
    let started = Instant::now();

    while step < budget {
        // ---- draw the batch ----
        let (batch, batch_len, step_epoch) = if stochastic {
            if cursor >= n {
                order.shuffle(&mut shuffle_rng);
                cursor = 0;
            }
            let end = (cursor + batch_size).min(n);
            let slice = &order[cursor..end];
            (Batch::Indices(slice), end - cursor, epoch)
        } else {
            // Full-batch: every update is a pass over the data.
            (Batch::All, n, step + 1)
        };

        // ---- evaluate ----
        let (loss, grad) = match problem.loss_grad(&params, batch) {
            Ok(pair) => pair,
            Err(e) => {
                let (at, reason) = divergence_info(e, step + 1, last_finite_loss);
                diverged = true;
                divergence_step = Some(at);
                divergence_reason = Some(reason);
                break;
            }
        };
        last_finite_loss = loss;

        // ---- stop before updating: the criterion is on the evaluated loss ----
        if let Some(target) = stop_loss {
            if loss < target {
                steps_to_target = Some(step);
                break;
            }
        }

        // ---- update ----
        let mut effective_lr = None;
        let mut lmin = None;
        let update = match &mut optimizer {
            OptimizerState::L4 { config, state } => {
                if state.is_none() {
                    // The first evaluation both initializes the tracked
                    // minimum loss and performs an update with the same
                    // loss/gradient pair.
                    match L4State::init(config, loss) {
                        Ok(s) => *state = Some(s),
                        Err(e) => Err(e)?,
                    }
                }
                let st = state.as_mut().expect("initialized above");
                st.step(config, loss, &grad, &mut params).map(|rec| {
                    assert!(
                        rec.gv >= 0.0,
                        "g.v must be non-negative by construction, got {}",
                        rec.gv
                    );
                    min_gv = Some(min_gv.map_or(rec.gv, |m: f64| m.min(rec.gv)));
                    effective_lr = Some(rec.eta);
                    lmin = Some(st.lmin());
                })
            }
            OptimizerState::Baseline { config, state } => {
                state.step(config, &grad, &mut params)
            }
        };
        if let Err(e) = update {
            let (at, reason) = divergence_info(e, step + 1, last_finite_loss);
            diverged = true;
            divergence_step = Some(at);
            divergence_reason = Some(reason);
            break;
        }
        step += 1;
        if stochastic {
            samples_processed += batch_len as u64;
            cursor += batch_len;
            if cursor >= n {
                epoch += 1;
            }
        }

        // ---- log ----
        if (step - 1) % log_every == 0 {
            csv.write_row(&MetricsRow {
                run_id: run_id.clone(),
                step,
                epoch: step_epoch,
                batch_loss: loss,
                effective_lr,
                lmin,
                wallclock_ms: started.elapsed().as_secs_f64() * 1e3,
            })?;
            logged.push((step, loss));
        }
    }
    csv.finish()?;

    let final_loss = match problem.full_loss(&params) {
        Ok(loss) => loss,
        Err(_) => last_finite_loss,
    };
    let final_accuracy = if diverged {
        None
    } else {
        built.as_mlp().and_then(|m| m.accuracy(&params).ok())
    };
    Ok(SingleOutcome {
        summary: RunSummary {
            run_id,
            seed,
            final_loss,
            steps_to_target,
            diverged,
            divergence_step,
            divergence_reason,
            min_gv,
            final_accuracy,
            steps_run: step,
            batch_size: stochastic.then_some(batch_size as u64),
            samples_processed: stochastic.then_some(samples_processed),
        },
        wallclock_ms: started.elapsed().as_secs_f64() * 1e3,
        logged,
    })
}

fn run_lma(
    spec: &ExperimentSpec,
    built: &BuiltProblem,
    seed: u64,
    out_dir: &Path,
) -> Result<SingleOutcome> {
    let prob = built
        .as_regression()
        .expect("validated: lma implies the regression problem");
    let run_id = format!("lma-s{seed}");
    let mut csv = MetricsWriter::create(out_dir.join(format!("{run_id}.csv")))?;
    let budget = spec.run.step_budget(1);
    let config = spec.optimizer.build_lma(budget, spec.run.stop_loss)?;
    let log_every = spec.log_every();

    let started = Instant::now();
    let result = lma_solve(prob, &config, Seed(seed).derive(TAG_PARAMS));
    let wallclock_ms = started.elapsed().as_secs_f64() * 1e3;

    let mut logged = Vec::new();
    let summary = match result {
        Ok(outcome) => {
            let mut cumulative_ms = 0.0;
            for rec in &outcome.records {
                cumulative_ms += rec.wallclock_ms;
                if (rec.iter - 1) % log_every == 0 {
                    csv.write_row(&MetricsRow {
                        run_id: run_id.clone(),
                        step: rec.iter,
                        epoch: rec.iter,
                        batch_loss: rec.loss,
                        effective_lr: None,
                        lmin: None,
                        wallclock_ms: cumulative_ms,
                    })?;
                    logged.push((rec.iter, rec.loss));
                }
            }
            let steps_to_target = if outcome.converged {
                Some(
                    outcome
                        .records
                        .iter()
                        .find(|r| r.loss < config.target_loss)
                        .map(|r| r.iter)
                        .unwrap_or(0),
                )
            } else {
                None
            };
            RunSummary {
                run_id,
                seed,
                final_loss: outcome.final_loss,
                steps_to_target,
                diverged: false,
                divergence_step: None,
                divergence_reason: None,
                min_gv: None,
                final_accuracy: None,
                steps_run: outcome.iterations(),
                batch_size: None,
                samples_processed: None,
            }
        }
        Err(e @ Error::DampingExhausted { .. }) => {
            let (iteration, loss) = match &e {
                Error::DampingExhausted {
                    iteration, loss, ..
                } => (*iteration, *loss),
                _ => unreachable!(),
            };
            RunSummary {
                run_id,
                seed,
                final_loss: loss,
                steps_to_target: None,
                diverged: true,
                divergence_step: Some(iteration),
                divergence_reason: Some(e.to_string()),
                min_gv: None,
                final_accuracy: None,
                steps_run: iteration,
                batch_size: None,
                samples_processed: None,
            }
        }
        Err(other) => return Err(other),
    };
    csv.finish()?;
    Ok(SingleOutcome {
        summary,
        wallclock_ms,
        logged,
    })
}

/// Pointwise log-space mean / min / max over restarts, truncated to the
/// shortest logged trajectory.
fn aggregate_trajectories(trajectories: &[Vec<(u64, f64)>]) -> TrajectorySummary {
    let common = trajectories.iter().map(Vec::len).min().unwrap_or(0);
    let mut steps = Vec::with_capacity(common);
    let mut geo_mean = Vec::with_capacity(common);
    let mut min = Vec::with_capacity(common);
    let mut max = Vec::with_capacity(common);
    for i in 0..common {
        let grid_step = trajectories[0][i].0;
        let mut ln_sum = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in trajectories {
            let (s, loss) = t[i];
            assert_eq!(s, grid_step, "restarts log on a common step grid");
            ln_sum += loss.ln();
            lo = lo.min(loss);
            hi = hi.max(loss);
        }
        steps.push(grid_step);
        geo_mean.push((ln_sum / trajectories.len() as f64).exp());
        min.push(lo);
        max.push(hi);
    }
    TrajectorySummary {
        steps,
        geo_mean,
        min,
        max,
    }
}

// ======================================================================
// sweep
// ======================================================================

/// Run `spec` once per batch size (each into `out_dir/bs{size}`),
/// returning summaries keyed by size in input order.
pub fn sweep_batch_size(
    spec: &ExperimentSpec,
    sizes: &[usize],
    out_dir: &Path,
) -> Result<Vec<(usize, ExperimentSummary)>> {
    spec.validate()?;
    if !spec.problem.is_stochastic() {
        return Err(Error::config(
            "sweep_batch_size requires a batched problem (mnist or synthetic)".to_string(),
        ));
    }
    let mut summaries = Vec::with_capacity(sizes.len());
    for &size in sizes {
        if size == 0 {
            return Err(Error::config("swept batch sizes must be positive".to_string()));
        }
        let mut swept = spec.clone();
        swept.problem.batch_size = Some(size);
        let sub = out_dir.join(format!("bs{size}"));
        summaries.push((size, run(&swept, &sub)?));
    }
    Ok(summaries)
}

// ======================================================================
// compare
// ======================================================================

/// One optimizer's row in a comparison table. Statistics run over the
/// converged restarts (those that reached `stop_loss`); `None` when no
/// restart converged.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub optimizer: String,
    pub runs: u64,
    pub converged: u64,
    pub steps_mean: Option<f64>,
    pub steps_std: Option<f64>,
    pub wallclock_s_mean: Option<f64>,
    pub wallclock_s_std: Option<f64>,
}

/// Output of [`compare`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    /// Aligned human-readable rendering (also written to `comparison.txt`).
    pub fn to_text(&self) -> String {
        let fmt_opt = |x: Option<f64>, digits: usize| match x {
            Some(v) => format!("{v:.digits$}"),
            None => "-".to_string(),
        };
        let mut out = format!(
            "{:<10} {:>5} {:>9} {:>12} {:>10} {:>12} {:>12}\n",
            "optimizer", "runs", "converged", "steps_mean", "steps_std", "wall_s_mean", "wall_s_std"
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{:<10} {:>5} {:>9} {:>12} {:>10} {:>12} {:>12}\n",
                row.optimizer,
                row.runs,
                row.converged,
                fmt_opt(row.steps_mean, 1),
                fmt_opt(row.steps_std, 1),
                fmt_opt(row.wallclock_s_mean, 3),
                fmt_opt(row.wallclock_s_std, 3),
            ));
        }
        out
    }
}

/// Sample mean and (n-1)-denominator standard deviation; `None` for empty
/// input, zero deviation for a single value.
fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

/// Run every spec (all sharing one problem section) and tabulate
/// steps-to-convergence and wall-clock per optimizer. Writes
/// `comparison.csv` and `comparison.txt` plus each spec's outputs under
/// numbered subdirectories of `out_dir`.
pub fn compare(specs: &[ExperimentSpec], out_dir: &Path) -> Result<ComparisonTable> {
    if specs.is_empty() {
        return Err(Error::config("compare needs at least one spec".to_string()));
    }
    for spec in specs {
        spec.validate()?;
    }
    let reference = &specs[0].problem;
    for spec in &specs[1..] {
        if &spec.problem != reference {
            return Err(Error::config(
                "compare requires every spec to share the same problem section".to_string(),
            ));
        }
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut rows = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let sub = out_dir.join(format!("{i:02}-{}", spec.optimizer.kind));
        let summary = run(spec, &sub)?;
        let mut steps = Vec::new();
        let mut wall_s = Vec::new();
        for (run_summary, &ms) in summary.runs.iter().zip(&summary.run_wallclock_ms) {
            if let Some(s) = run_summary.steps_to_target {
                steps.push(s as f64);
                wall_s.push(ms / 1e3);
            }
        }
        let steps_stats = mean_std(&steps);
        let wall_stats = mean_std(&wall_s);
        rows.push(ComparisonRow {
            optimizer: spec.optimizer.kind.clone(),
            runs: summary.runs.len() as u64,
            converged: steps.len() as u64,
            steps_mean: steps_stats.map(|(m, _)| m),
            steps_std: steps_stats.map(|(_, s)| s),
            wallclock_s_mean: wall_stats.map(|(m, _)| m),
            wallclock_s_std: wall_stats.map(|(_, s)| s),
        });
    }

    let table = ComparisonTable { rows };
    let mut csv = String::from(
        "optimizer,runs,converged,steps_mean,steps_std,wallclock_s_mean,wallclock_s_std\n",
    );
    for row in &table.rows {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.optimizer,
            row.runs,
            row.converged,
            opt(row.steps_mean),
            opt(row.steps_std),
            opt(row.wallclock_s_mean),
            opt(row.wallclock_s_std),
        ));
    }
    let csv_path = out_dir.join("comparison.csv");
    fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;
    let txt_path = out_dir.join("comparison.txt");
    fs::write(&txt_path, table.to_text()).map_err(|e| Error::io(&txt_path, e))?;
    Ok(table)
}

// ======================================================================
// learning-rate grid
// ======================================================================

/// The documented baseline grid: log-spaced, 8 points per decade, from
/// `1e-6` up to `10` inclusive (57 points, consecutive ratio `10^(1/8)`).
pub fn default_lr_grid() -> Vec<f64> {
    (0..=56).map(|k| 10f64.powf(-6.0 + k as f64 / 8.0)).collect()
}
