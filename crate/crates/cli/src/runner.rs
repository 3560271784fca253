//! Runs every (problem, kernel) pair of an experiment on a worker pool and
//! writes samples, reports, the summary table and the run manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sphmc::diagnostics::{efficiency_summary, ChainReport};
use sphmc::dynamics::{IntegratorConfig, TrajectoryWriter};
use sphmc::io::{write_samples_csv, ChainRecord, RunManifest};
use sphmc::samplers::{
    run_chain, tune_step_size, Chain, ChainConfig, Kernel, KernelKind, Rwm, SphHmc, SphLmc, WallHmcBox,
    WallHmcDiamond,
};

use crate::config::{ExperimentConfig, Resolved};
use crate::error::{CliError, CliResult};
use crate::problems::{self, Problem};

pub const PARTIAL_MARKER: &str = ".partial";
const PILOT: (usize, usize) = (600, 100);

pub struct RunOptions {
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub trace: bool,
}

/// Result of one (problem, kernel) pair.
struct Group {
    problem: usize,
    kind: KernelKind,
    label: String,
    step_size: Option<f64>,
    chains: Vec<Chain>,
    trace: Option<TrajectoryWriter>,
}

pub struct RunSummary {
    pub reports: Vec<(Option<f64>, ChainReport)>,
    pub out: PathBuf,
}

fn label(kind: KernelKind, s: Option<f64>) -> String {
    match s {
        Some(s) => format!("{}_s{s:.2}", kind.name()),
        None => kind.name().to_string(),
    }
}

/// Runs the experiment. Outputs of the pairs that finished are written even
/// when another pair fails; the `.partial` marker then stays behind with
/// the error message.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> CliResult<RunSummary> {
    let started = Instant::now();
    let problems = problems::build(cfg)?;
    let mut tasks = Vec::new();
    for (pi, problem) in problems.iter().enumerate() {
        for &kind in &cfg.kernels {
            let settings = cfg.resolve(kind)?;
            // kernels that cannot handle the domain or start fail here, before any output
            run_group(problem, kind, &settings, cfg, 0, Mode::Check).map_err(|e| match e {
                CliError::Runtime(m) => CliError::Config(m),
                e => e,
            })?;
            tasks.push((pi, kind, settings));
        }
    }
    fs::create_dir_all(&opts.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", opts.out.display())))?;
    let marker = opts.out.join(PARTIAL_MARKER);
    fs::write(&marker, "running\n").map_err(|e| CliError::Runtime(format!("{} is not writable: {e}", opts.out.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let results: Vec<CliResult<Group>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(pi, kind, settings)| {
                let mode = if opts.trace { Mode::Trace } else { Mode::Sample };
                let first_stream = first_stream(*pi, *kind, cfg.chains);
                run_group(&problems[*pi], *kind, settings, cfg, first_stream, mode).map(|(step_size, chains, trace)| {
                    Group { problem: *pi, kind: *kind, label: label(*kind, problems[*pi].shrinkage), step_size, chains, trace }
                })
            })
            .collect()
    });

    let mut groups = Vec::new();
    let mut failures = Vec::new();
    let mut all_config = true;
    for (r, (pi, kind, _)) in results.into_iter().zip(&tasks) {
        match r {
            Ok(g) => groups.push(g),
            Err(e) => {
                all_config &= matches!(e, CliError::Config(_));
                failures.push(format!("{}: {e}", label(*kind, problems[*pi].shrinkage)));
            }
        }
    }
    let written = write_outputs(cfg, opts, &problems, &groups, started);
    if !failures.is_empty() {
        let msg = failures.join("; ");
        let _ = fs::write(&marker, format!("{msg}\n"));
        return Err(if all_config { CliError::Config(msg) } else { CliError::Runtime(msg) });
    }
    let reports = written.map_err(|e| {
        let _ = fs::write(&marker, format!("{e}\n"));
        e
    })?;
    fs::remove_file(&marker)?;
    Ok(RunSummary { reports, out: opts.out.clone() })
}

/// Random streams depend on the problem, the kernel and the chain only, so
/// a kernel's samples do not change when other kernels are added or removed.
fn first_stream(problem: usize, kind: KernelKind, chains: usize) -> u64 {
    (problem as u64 * KernelKind::ALL.len() as u64 + kind as u64) * chains as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Build the kernel and its initial state without sampling.
    Check,
    Sample,
    /// Sample and record one leapfrog trajectory.
    Trace,
}

type GroupOutput = (Option<f64>, Vec<Chain>, Option<TrajectoryWriter>);

fn run_group(
    problem: &Problem,
    kind: KernelKind,
    settings: &Resolved,
    cfg: &ExperimentConfig,
    first_stream: u64,
    mode: Mode,
) -> CliResult<GroupOutput> {
    let target = &*problem.target;
    let spec = &problem.spec;
    let drive = Driver { settings, cfg, first_stream, init: problem.init.clone(), check_only: mode == Mode::Check };
    match kind {
        KernelKind::Rwm => {
            let k = Rwm::new(target, spec.clone(), settings.rwm_scale)?;
            Ok((None, drive.chains(&k)?, None))
        }
        KernelKind::CSphHmc | KernelKind::SSphHmc => {
            let coords = if kind == KernelKind::CSphHmc {
                sphmc::geometry::Coordinates::Cartesian
            } else {
                sphmc::geometry::Coordinates::Spherical
            };
            let make = |c: IntegratorConfig| SphHmc::new(target, spec.clone(), coords, c);
            let (eps, chains) = drive.integrated(make)?;
            let tr = if mode == Mode::Trace {
                let k = make(drive.integrator(eps)?)?;
                let state = k.initial_state(problem.init.as_deref())?;
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                Some(k.trace_trajectory(&state, &mut rng))
            } else {
                None
            };
            Ok((Some(eps), chains, tr))
        }
        KernelKind::WallHmcBox => {
            let (eps, chains) = drive.integrated(|c| WallHmcBox::new(target, spec.clone(), c))?;
            Ok((Some(eps), chains, None))
        }
        KernelKind::WallHmcDiamond => {
            let (eps, chains) = drive.integrated(|c| WallHmcDiamond::new(target, spec, c))?;
            Ok((Some(eps), chains, None))
        }
        KernelKind::SphLmc => {
            let model = problem
                .simplex
                .clone()
                .ok_or_else(|| CliError::Config("SphLMC only samples simplex (dirichlet_toy) problems".into()))?;
            let (eps, chains) = drive.integrated(|c| SphLmc::new(model.clone(), c))?;
            Ok((Some(eps), chains, None))
        }
    }
}

struct Driver<'a> {
    settings: &'a Resolved,
    cfg: &'a ExperimentConfig,
    first_stream: u64,
    init: Option<Vec<f64>>,
    check_only: bool,
}

impl Driver<'_> {
    fn chain_config(&self, n: usize, burn: usize, stream: u64) -> ChainConfig {
        let mut c = ChainConfig::new(n, burn, self.cfg.seed).with_stream(stream);
        c.init = self.init.clone();
        c
    }

    fn integrator(&self, eps: f64) -> sphmc::Result<IntegratorConfig> {
        let mut c = IntegratorConfig::new(eps, self.settings.leapfrog_steps)?;
        c.epsilon_vector = self.settings.epsilon_vector;
        Ok(c)
    }

    fn chains<K: Kernel>(&self, k: &K) -> CliResult<Vec<Chain>> {
        if self.check_only {
            k.initial_state(self.init.as_deref())?;
            return Ok(Vec::new());
        }
        (0..self.cfg.chains as u64)
            .map(|c| {
                let cc = self.chain_config(self.settings.iterations, self.settings.burn_in, self.first_stream + c);
                run_chain(k, &cc).map_err(CliError::from)
            })
            .collect()
    }

    /// Tunes the step size if asked, then runs the chains.
    fn integrated<K: Kernel>(&self, make: impl Fn(IntegratorConfig) -> sphmc::Result<K>) -> CliResult<(f64, Vec<Chain>)> {
        let eps = if self.settings.tune && !self.check_only {
            let pilot = self.chain_config(PILOT.0, PILOT.1, self.first_stream);
            let (eps, _) = tune_step_size(&self.settings.tune_grid, &pilot, |e| make(self.integrator(e)?))?;
            eps
        } else {
            self.settings.step_size
        };
        let k = make(self.integrator(eps)?)?;
        Ok((eps, self.chains(&k)?))
    }
}

fn write_outputs(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    problems: &[Problem],
    groups: &[Group],
    started: Instant,
) -> CliResult<Vec<(Option<f64>, ChainReport)>> {
    let out = &opts.out;
    let mut records = Vec::new();
    let mut reports = Vec::with_capacity(groups.len());
    for g in groups {
        for (c, chain) in g.chains.iter().enumerate() {
            let file = if cfg.write_samples {
                let name = format!("samples_{}_chain{c}.csv", g.label);
                write_samples_csv(chain, BufWriter::new(File::create(out.join(&name))?))?;
                Some(name)
            } else {
                None
            };
            records.push(ChainRecord::new(chain, file));
        }
        if let Some(t) = &g.trace {
            t.write_csv(BufWriter::new(File::create(out.join(format!("trajectory_{}.csv", g.label)))?))?;
        }
        let refs: Vec<&Chain> = g.chains.iter().collect();
        reports.push(efficiency_summary(&refs)?);
    }
    // speedups are relative to the baseline kernel on the same problem
    let baseline = cfg.baseline.or_else(|| cfg.kernels.contains(&KernelKind::Rwm).then_some(KernelKind::Rwm));
    if let Some(b) = baseline {
        for pi in 0..problems.len() {
            let Some(bi) = groups.iter().position(|g| g.problem == pi && g.kind == b) else { continue };
            let base = reports[bi].clone();
            for (g, r) in groups.iter().zip(reports.iter_mut()) {
                if g.problem == pi {
                    *r = r.clone().with_baseline(&base);
                }
            }
        }
    }
    for (g, r) in groups.iter().zip(&reports) {
        write_json(&out.join(format!("report_{}.json", g.label)), r)?;
    }
    let dim = problems.first().map_or(0, Problem::dim);
    write_summary(&out.join("summary.csv"), cfg, problems, groups, &reports, dim)?;
    if cfg.experiment.is_path() {
        write_path(&out.join("path.csv"), problems, groups, &reports, dim)?;
    }
    let manifest = RunManifest {
        experiment: cfg.experiment.name().to_string(),
        seed: cfg.seed,
        config: serde_json::to_value(cfg).map_err(|e| CliError::Runtime(e.to_string()))?,
        chains: records,
        total_secs: started.elapsed().as_secs_f64(),
    };
    manifest.write(&out.join("manifest.json"))?;
    Ok(groups.iter().zip(reports).map(|(g, r)| (problems[g.problem].shrinkage, r)).collect())
}

fn write_json(path: &Path, report: &ChainReport) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, report).map_err(|e| CliError::Runtime(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "experiment",
    "s",
    "kernel",
    "D",
    "step_size",
    "AP",
    "sec_per_iter",
    "ess_min",
    "ess_med",
    "ess_max",
    "min_ess_per_sec",
    "speedup_vs_baseline",
    "weight_eff",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_summary(
    path: &Path,
    cfg: &ExperimentConfig,
    problems: &[Problem],
    groups: &[Group],
    reports: &[ChainReport],
    dim: usize,
) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut header: Vec<String> = SUMMARY_COLUMNS.iter().map(|s| s.to_string()).collect();
    if !groups.is_empty() {
        header.extend((1..=dim).map(|j| format!("mean_{j}")));
    }
    writeln!(w, "{}", header.join(","))?;
    for (g, r) in groups.iter().zip(reports) {
        let mut row = vec![
            cfg.experiment.name().to_string(),
            opt(problems[g.problem].shrinkage),
            r.kernel.clone(),
            r.dim.to_string(),
            opt(g.step_size),
            r.acceptance.to_string(),
            r.sec_per_iter.to_string(),
            r.ess.min.to_string(),
            r.ess.med.to_string(),
            r.ess.max.to_string(),
            r.min_ess_per_sec.to_string(),
            opt(r.speedup_vs_baseline),
            r.weight_eff.to_string(),
        ];
        row.extend(r.mean.iter().map(f64::to_string));
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Posterior means per shrinkage value, one row per (s, kernel).
fn write_path(path: &Path, problems: &[Problem], groups: &[Group], reports: &[ChainReport], dim: usize) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut header = vec!["s".to_string(), "kernel".to_string()];
    header.extend((1..=dim).map(|j| format!("beta_{j}")));
    writeln!(w, "{}", header.join(","))?;
    for (g, r) in groups.iter().zip(reports) {
        let mut row = vec![opt(problems[g.problem].shrinkage), r.kernel.clone()];
        row.extend(r.mean.iter().map(|m| format!("{m:e}")));
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}
