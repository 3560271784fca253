//! `sphmc`: configuration-driven runner for the constrained samplers.

mod config;
mod error;
mod problems;
mod runner;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sphmc::samplers::KernelKind;

use config::{ExperimentConfig, ExperimentTag};
use error::{CliError, CliResult};
use runner::RunOptions;

#[derive(Parser, Debug)]
#[command(name = "sphmc", version, about = "Spherical augmentation samplers for constrained distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment described by a TOML config file
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the built-in property checks
    Verify,
    /// Posterior means along a shrinkage path for lasso or bridge regression
    Path {
        #[arg(long, value_enum)]
        model: PathModel,
        /// Exponent of the bridge penalty; must be 1 (or absent) for lasso
        #[arg(long)]
        q: Option<f64>,
        /// Shrinkage factors in (0, 1]
        #[arg(long, value_delimiter = ',')]
        s_grid: Option<Vec<f64>>,
        /// Regression data: numeric columns, response last unless --response names it
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        response: Option<String>,
        /// Iterations per chain, burn-in included
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory (default: out/<experiment>)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores
    #[arg(long)]
    workers: Option<usize>,
    /// Kernels to run, replacing the configured list
    #[arg(long, value_delimiter = ',')]
    kernel: Option<Vec<String>>,
    /// Also dump one leapfrog trajectory per SphHMC kernel
    #[arg(long)]
    trace: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PathModel {
    Lasso,
    Bridge,
}

fn apply_common(cfg: &mut ExperimentConfig, common: &Common) -> CliResult<RunOptions> {
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(names) = &common.kernel {
        cfg.kernels = names
            .iter()
            .filter(|n| !n.is_empty())
            .map(|n| n.parse::<KernelKind>().map_err(|e| CliError::Config(e.to_string())))
            .collect::<CliResult<_>>()?;
    }
    cfg.validate()?;
    if common.workers == Some(0) {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(|p| if p.is_absolute() { p.clone() } else { cfg.base_dir.join(p) }))
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.experiment.name()));
    Ok(RunOptions { out, workers: common.workers, trace: common.trace })
}

fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> CliResult<()> {
    let summary = runner::run(cfg, opts)?;
    for (s, r) in &summary.reports {
        let s = s.map(|s| format!(" s={s:.2}")).unwrap_or_default();
        println!(
            "{}{s}: AP {:.3}, min ESS {:.0}, min ESS/s {:.1}",
            r.kernel, r.acceptance, r.ess.min, r.min_ess_per_sec
        );
    }
    println!("wrote {}", summary.out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, common } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            let opts = apply_common(&mut cfg, &common)?;
            run(&cfg, &opts)
        }
        Command::Verify => {
            let checks = verify::run_all();
            for c in &checks {
                println!("[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Verify(failed.join(", ")))
            }
        }
        Command::Path { model, q, s_grid, dataset, response, iterations, burn_in, common } => {
            let tag = match model {
                PathModel::Lasso => ExperimentTag::LassoPath,
                PathModel::Bridge => ExperimentTag::BridgePath,
            };
            let mut cfg = ExperimentConfig::new(tag);
            cfg.kernels = vec![KernelKind::CSphHmc];
            cfg.problem.dataset = Some(dataset);
            cfg.problem.response = response;
            cfg.problem.q = q;
            cfg.problem.shrinkage = s_grid;
            cfg.sampler.iterations = iterations;
            cfg.sampler.burn_in = burn_in;
            let opts = apply_common(&mut cfg, &common)?;
            run(&cfg, &opts)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
