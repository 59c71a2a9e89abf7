use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phasegbs::config::{self, Overrides, RunConfig, Task};
use phasegbs::{commands, selftest};

#[derive(Parser)]
#[command(name = "phasegbs", version, about = "Phase-space simulation of Gaussian boson sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grouped click-count distribution from the phase-space ensemble.
    Simulate(RunArgs),
    /// Compare a theory distribution with measured click patterns.
    Compare(RunArgs),
    /// Multipartite entanglement witness from quadrature variances.
    Entangle(RunArgs),
    /// Exact grouped distribution, optionally with sampled patterns.
    Oracle(RunArgs),
    /// Fast internal consistency checks.
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    subensembles: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Click-pattern file for `compare`.
    #[arg(long)]
    patterns: Option<PathBuf>,
    /// Transmission matrix file.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Multiply every transmission entry by this factor.
    #[arg(long)]
    scale: Option<f64>,
}

fn load(task: Task, args: &RunArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::preset(task),
    };
    cfg.task = task;
    cfg.apply(&Overrides {
        seed: args.seed,
        samples: args.samples,
        subensembles: args.subensembles,
        out: args.out.clone(),
        patterns: args.patterns.clone(),
        matrix: args.matrix.clone(),
        epsilon: args.epsilon,
        scale: args.scale,
    });
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (task, args) = match cli.command {
        Command::Simulate(a) => (Task::Simulate, a),
        Command::Compare(a) => (Task::Compare, a),
        Command::Entangle(a) => (Task::Entangle, a),
        Command::Oracle(a) => (Task::Oracle, a),
        Command::Selftest => {
            return if selftest::run() { ExitCode::SUCCESS } else { ExitCode::from(3) };
        }
    };
    let resolved = match load(task, &args).and_then(|cfg| config::resolve(&cfg)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match commands::run(&resolved) {
        Ok(()) => {
            eprintln!("seed {}; wrote {}", resolved.seed, resolved.config.output_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
