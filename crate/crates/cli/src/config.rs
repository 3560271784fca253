//! TOML experiment configuration and per-kernel sampler settings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sphmc::samplers::KernelKind;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentTag {
    Tmg2d,
    #[serde(rename = "tmgD")]
    TmgD,
    LassoPath,
    BridgePath,
    QuantizedGp,
    DirichletToy,
}

impl ExperimentTag {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tmg2d => "tmg2d",
            Self::TmgD => "tmgD",
            Self::LassoPath => "lasso_path",
            Self::BridgePath => "bridge_path",
            Self::QuantizedGp => "quantized_gp",
            Self::DirichletToy => "dirichlet_toy",
        }
    }

    pub fn is_path(self) -> bool {
        matches!(self, Self::LassoPath | Self::BridgePath)
    }
}

/// Sampler knobs. Every field is optional so that a kernel section only
/// needs to name what it overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSettings {
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub step_size: Option<f64>,
    pub leapfrog_steps: Option<usize>,
    pub epsilon_vector: Option<bool>,
    /// Proposal standard deviation of RWM.
    pub rwm_scale: Option<f64>,
    /// Pick the step size by pilot runs over `tune_grid`.
    pub tune: Option<bool>,
    pub tune_grid: Option<Vec<f64>>,
}

impl SamplerSettings {
    /// Fields of `self`, falling back to `base`.
    pub fn over(&self, base: &SamplerSettings) -> SamplerSettings {
        SamplerSettings {
            iterations: self.iterations.or(base.iterations),
            burn_in: self.burn_in.or(base.burn_in),
            step_size: self.step_size.or(base.step_size),
            leapfrog_steps: self.leapfrog_steps.or(base.leapfrog_steps),
            epsilon_vector: self.epsilon_vector.or(base.epsilon_vector),
            rwm_scale: self.rwm_scale.or(base.rwm_scale),
            tune: self.tune.or(base.tune),
            tune_grid: self.tune_grid.clone().or_else(|| base.tune_grid.clone()),
        }
    }
}

/// Fully resolved settings for one kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub iterations: usize,
    pub burn_in: usize,
    pub step_size: f64,
    pub leapfrog_steps: usize,
    pub epsilon_vector: bool,
    pub rwm_scale: f64,
    pub tune: bool,
    pub tune_grid: Vec<f64>,
}

pub const DEFAULT_TUNE_GRID: [f64; 6] = [0.2, 0.1, 0.05, 0.02, 0.01, 0.005];

/// Problem parameters; which fields apply depends on the experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// `tmg2d`: `gaussian` or `damped_sine`.
    pub density: Option<String>,
    pub mean: Option<Vec<f64>>,
    pub cov: Option<Vec<Vec<f64>>>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    /// `tmgD` dimension.
    pub dim: Option<usize>,
    /// Regression data file; relative paths resolve against the config file.
    pub dataset: Option<PathBuf>,
    pub response: Option<String>,
    pub standardize: Option<bool>,
    pub q: Option<f64>,
    pub shrinkage: Option<Vec<f64>>,
    pub sigma2: Option<f64>,
    /// Quantized GP grid size, spacing, kernel and quantizer.
    pub points: Option<usize>,
    pub spacing: Option<f64>,
    pub eta2: Option<f64>,
    pub levels: Option<Vec<f64>>,
    /// Bin edges; use `-inf` / `inf` for open bins.
    pub edges: Option<Vec<f64>>,
    pub data_seed: Option<u64>,
    /// Dirichlet-multinomial counts and prior.
    pub counts: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentTag,
    #[serde(default)]
    pub kernels: Vec<KernelKind>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Independent chains per kernel (and per shrinkage value).
    #[serde(default = "default_chains")]
    pub chains: usize,
    pub out: Option<PathBuf>,
    /// Kernel whose min ESS/s normalizes the speedup column.
    pub baseline: Option<KernelKind>,
    #[serde(default = "default_true")]
    pub write_samples: bool,
    #[serde(default)]
    pub sampler: SamplerSettings,
    /// Per-kernel overrides keyed by kernel name.
    #[serde(default)]
    pub kernel: BTreeMap<String, SamplerSettings>,
    #[serde(default)]
    pub problem: ProblemConfig,
    /// Directory of the config file, for resolving relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_seed() -> u64 {
    2015
}

fn default_chains() -> usize {
    1
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentTag) -> Self {
        Self {
            experiment,
            kernels: Vec::new(),
            seed: default_seed(),
            chains: default_chains(),
            out: None,
            baseline: None,
            write_samples: true,
            sampler: SamplerSettings::default(),
            kernel: BTreeMap::new(),
            problem: ProblemConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_in(&text, path.parent().unwrap_or(Path::new("")))
    }

    /// Parses and validates a config whose relative paths resolve against `base_dir`.
    pub fn parse_in(text: &str, base_dir: &Path) -> CliResult<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.chains == 0 {
            return Err(CliError::Config("chains must be at least 1".into()));
        }
        for (i, k) in self.kernels.iter().enumerate() {
            if self.kernels[..i].contains(k) {
                return Err(CliError::Config(format!("kernel {k} is listed twice")));
            }
        }
        for name in self.kernel.keys() {
            name.parse::<KernelKind>().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(s) = &self.problem.shrinkage {
            if s.is_empty() || s.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
                return Err(CliError::Config("shrinkage values must lie in (0, 1]".into()));
            }
        }
        if let Some(dataset) = self.dataset() {
            if !dataset.is_file() {
                return Err(CliError::Config(format!("dataset {} does not exist", dataset.display())));
            }
        }
        Ok(())
    }

    pub fn dataset(&self) -> Option<PathBuf> {
        self.problem.dataset.as_ref().map(|p| if p.is_absolute() { p.clone() } else { self.base_dir.join(p) })
    }

    /// Settings for `kind`: kernel section, then `[sampler]`, then the
    /// experiment defaults.
    pub fn resolve(&self, kind: KernelKind) -> CliResult<Resolved> {
        let own = self
            .kernel
            .iter()
            .find(|(k, _)| k.parse::<KernelKind>().ok() == Some(kind))
            .map(|(_, s)| s.clone())
            .unwrap_or_default();
        let mut user = own.over(&self.sampler);
        // a user-chosen chain length without a burn-in keeps a tenth of it
        if user.burn_in.is_none() {
            user.burn_in = user.iterations.map(|n| n / 10);
        }
        let s = user.over(&defaults(self.experiment, kind));
        let r = Resolved {
            iterations: s.iterations.unwrap_or(10_000),
            burn_in: s.burn_in.unwrap_or(0),
            step_size: s.step_size.unwrap_or(0.1),
            leapfrog_steps: s.leapfrog_steps.unwrap_or(10),
            epsilon_vector: s.epsilon_vector.unwrap_or(false),
            rwm_scale: s.rwm_scale.unwrap_or(0.1),
            tune: s.tune.unwrap_or(false),
            tune_grid: s.tune_grid.unwrap_or_else(|| DEFAULT_TUNE_GRID.to_vec()),
        };
        if r.burn_in > r.iterations {
            return Err(CliError::Config(format!("{kind}: burn_in {} exceeds iterations {}", r.burn_in, r.iterations)));
        }
        if r.tune && r.tune_grid.is_empty() {
            return Err(CliError::Config(format!("{kind}: empty tune_grid")));
        }
        Ok(r)
    }
}

/// Desk-scale defaults per experiment and kernel.
fn defaults(tag: ExperimentTag, kind: KernelKind) -> SamplerSettings {
    use KernelKind::*;
    let (iterations, burn_in) = match tag {
        ExperimentTag::Tmg2d | ExperimentTag::DirichletToy => (20_000, 2_000),
        ExperimentTag::TmgD => (10_000, 1_000),
        ExperimentTag::LassoPath | ExperimentTag::BridgePath | ExperimentTag::QuantizedGp => (6_000, 1_000),
    };
    let (step_size, leapfrog_steps, rwm_scale) = match (tag, kind) {
        (ExperimentTag::TmgD, CSphHmc) => (0.2, 3, 0.08),
        (ExperimentTag::TmgD, SSphHmc) => (0.4, 2, 0.08),
        (ExperimentTag::TmgD, _) => (0.1, 10, 0.08),
        (ExperimentTag::QuantizedGp, _) => (0.05, 10, 0.05),
        (ExperimentTag::LassoPath | ExperimentTag::BridgePath, _) => (0.05, 20, 0.05),
        (ExperimentTag::Tmg2d, Rwm) => (0.3, 5, 0.5),
        _ => (0.3, 5, 0.3),
    };
    SamplerSettings {
        iterations: Some(iterations),
        burn_in: Some(burn_in),
        step_size: Some(step_size),
        leapfrog_steps: Some(leapfrog_steps),
        epsilon_vector: Some(false),
        rwm_scale: Some(rwm_scale),
        tune: Some(tag.is_path() && kind != Rwm),
        tune_grid: None,
    }
}
