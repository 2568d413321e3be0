//! `ymlab` — reproducible experiment runner for the lattice Yang-Mills
//! heat flow, its linearization, the vertical-correction recovery, and the
//! inequality checkers.
//!
//! One scenario per invocation; all stochastic inputs derive from a single
//! 64-bit master seed, and reruns with the same config and seed produce
//! byte-identical artifacts at any thread count.
//!
//! Exit codes: 0 success, 1 check failure, 2 configuration/schema error,
//! 3 numeric divergence.

mod config;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{config_hash, ExperimentConfig, Scenario};
use output::OutputContext;
use ymlab::error::Error;

#[derive(Parser)]
#[command(name = "ymlab", version, about = "Lattice Yang-Mills heat-flow laboratory")]
struct Cli {
    #[command(subcommand)]
    scenario: ScenarioCmd,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Master seed; all sampling derives from it by labeled splitting.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Rayon worker threads (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Write a field snapshot every K nodes (0 = none).
    #[arg(long, global = true, default_value_t = 0)]
    snapshot_every: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum ScenarioCmd {
    /// Integrate the Yang-Mills heat flow and record curvature observables.
    Heatflow,
    /// Solve the augmented variational equation along the flow.
    Variational,
    /// Recover variational solutions by the vertical correction.
    Recover,
    /// Run the Hardy and Gaffney-Friedrichs check sweeps.
    Checks,
    /// Compare the abelian flow against its spectral closed form.
    Oracle,
}

impl From<ScenarioCmd> for Scenario {
    fn from(c: ScenarioCmd) -> Self {
        match c {
            ScenarioCmd::Heatflow => Scenario::Heatflow,
            ScenarioCmd::Variational => Scenario::Variational,
            ScenarioCmd::Recover => Scenario::Recover,
            ScenarioCmd::Checks => Scenario::Checks,
            ScenarioCmd::Oracle => Scenario::Oracle,
        }
    }
}

const EXIT_CHECK_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } | Error::Numeric(_) => EXIT_DIVERGENCE,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // ignore the error if a pool already exists (e.g. under a test
        // harness); determinism does not depend on the worker count
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }

    let scenario: Scenario = cli.scenario.into();
    let config_path = match &cli.config {
        Some(p) => p,
        None => {
            eprintln!("error: --config is required");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let text = match std::fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cfg = match ExperimentConfig::parse(&text, scenario) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create {}: {e}", cli.out.display());
        return ExitCode::from(EXIT_CONFIG);
    }

    let hash = config_hash(&text);
    let out = OutputContext {
        dir: &cli.out,
        config_hash: &hash,
        seed: cli.seed,
        snapshot_every: cli.snapshot_every,
    };
    match scenario::run(scenario, &cfg, &out) {
        Ok(report) => {
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                for e in &report.entries {
                    if e.verdict == ymlab::diagnostics::Verdict::Fail {
                        eprintln!(
                            "check failed: {} (residual {:.3e} > tolerance {:.3e})",
                            e.name, e.residual, e.tolerance
                        );
                    }
                }
                ExitCode::from(EXIT_CHECK_FAILURE)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
