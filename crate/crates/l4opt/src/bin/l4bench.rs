//! `l4bench` — configurable optimization experiment runner.
//!
//! Subcommands:
//! - `run`: execute one TOML-described experiment (multi-restart), writing
//!   per-run CSV metrics and a `summary.json`.
//! - `sweep`: re-run one config across a list of mini-batch sizes.
//! - `compare`: run several configs sharing a problem and tabulate
//!   steps-to-convergence and wall-clock per optimizer.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use l4opt::harness::{
    self, ExperimentSpec, ExperimentSummary, MNIST_IMAGES_FILE, MNIST_LABELS_FILE,
};

#[derive(Parser)]
#[command(
    name = "l4bench",
    version,
    about = "Run loss-adaptive-stepsize optimization experiments from TOML configs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a TOML config.
    Run(RunArgs),
    /// Re-run one stochastic config across several mini-batch sizes.
    Sweep(SweepArgs),
    /// Run several configs over a common problem and tabulate convergence.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if absent).
    #[arg(long)]
    out: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's restart count.
    #[arg(long)]
    restarts: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML experiment config (mnist or synthetic problem).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; each size writes into `bs{size}/` beneath it.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated batch sizes, e.g. 8,16,32,64.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's restart count.
    #[arg(long)]
    restarts: Option<u64>,
}

#[derive(Args)]
struct CompareArgs {
    /// Comma-separated TOML configs sharing one problem section.
    #[arg(long, value_delimiter = ',', required = true)]
    configs: Vec<PathBuf>,
    /// Output directory; each config writes into a numbered subdirectory.
    #[arg(long)]
    out: PathBuf,
}

fn load_spec(path: &PathBuf, seed: Option<u64>, restarts: Option<u64>) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::from_toml_file(path)
        .with_context(|| format!("loading config {}", path.display()))?;
    if let Some(s) = seed {
        spec.run.seed_base = s;
    }
    if let Some(r) = restarts {
        spec.run.restarts = r;
    }
    Ok(spec)
}

/// If the config asks for MNIST but the IDX files are absent, say so up
/// front (the harness will quietly use the synthetic fallback dataset).
fn note_mnist_fallback(spec: &ExperimentSpec) {
    if spec.problem.kind != "mnist" {
        return;
    }
    let dir = spec
        .problem
        .data_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("data"));
    if dir.join(MNIST_IMAGES_FILE).is_file() && dir.join(MNIST_LABELS_FILE).is_file() {
        return;
    }
    eprintln!(
        "note: MNIST IDX files not found in {dir:?}; falling back to a synthetic dataset.\n\
         To use real MNIST, place the decompressed IDX files there, e.g.:\n\
           mkdir -p {dir:?}\n\
           curl -LO https://storage.googleapis.com/cvdf-datasets/mnist/{images}.gz\n\
           curl -LO https://storage.googleapis.com/cvdf-datasets/mnist/{labels}.gz\n\
           gunzip {images}.gz {labels}.gz\n\
           mv {images} {labels} {dir:?}/",
        dir = dir,
        images = MNIST_IMAGES_FILE,
        labels = MNIST_LABELS_FILE,
    );
}

fn print_summary(summary: &ExperimentSummary, out: &PathBuf) {
    println!(
        "{} on {} ({} data): {} run(s)",
        summary.optimizer,
        summary.problem,
        summary.data_source,
        summary.runs.len()
    );
    for run in &summary.runs {
        let status = if run.diverged {
            format!(
                "DIVERGED at step {}",
                run.divergence_step.unwrap_or_default()
            )
        } else {
            match run.steps_to_target {
                Some(s) => format!("reached target in {s} steps"),
                None => format!("ran {} steps", run.steps_run),
            }
        };
        let accuracy = run
            .final_accuracy
            .map(|a| format!(", accuracy {:.2}%", a * 100.0))
            .unwrap_or_default();
        println!(
            "  {:<16} final loss {:>12.6e}  {status}{accuracy}",
            run.run_id, run.final_loss
        );
    }
    println!("outputs: {}", out.display());
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => {
            let spec = load_spec(&args.config, args.seed, args.restarts)?;
            note_mnist_fallback(&spec);
            let summary = harness::run(&spec, &args.out)?;
            print_summary(&summary, &args.out);
        }
        Command::Sweep(args) => {
            let spec = load_spec(&args.config, args.seed, args.restarts)?;
            note_mnist_fallback(&spec);
            let summaries = harness::sweep_batch_size(&spec, &args.sizes, &args.out)?;
            for (size, summary) in &summaries {
                println!("== batch size {size} ==");
                print_summary(summary, &args.out.join(format!("bs{size}")));
            }
        }
        Command::Compare(args) => {
            let mut specs = Vec::with_capacity(args.configs.len());
            for path in &args.configs {
                let spec = load_spec(path, None, None)?;
                note_mnist_fallback(&spec);
                specs.push(spec);
            }
            let table = harness::compare(&specs, &args.out)?;
            print!("{}", table.to_text());
            println!("outputs: {}", args.out.display());
        }
    }
    Ok(())
}
