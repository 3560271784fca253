//! Complete MCMC kernels producing weighted chains, and the chain runner.

mod rwm;
mod sphhmc;
mod sphlmc;
mod wall;

pub use rwm::Rwm;
pub use sphhmc::{SphHmc, SphState};
pub use sphlmc::SphLmc;
pub use wall::{diamond_reflect, reflect_box, DiamondMove, WallHmcBox, WallHmcDiamond, MAX_BOUNCES};

use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Log-weights are clamped to this range before exponentiation.
pub const LOG_WEIGHT_CLAMP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    #[serde(rename = "RWM")]
    Rwm,
    #[serde(rename = "WallHMC-box")]
    WallHmcBox,
    #[serde(rename = "WallHMC-diamond")]
    WallHmcDiamond,
    #[serde(rename = "cSphHMC")]
    CSphHmc,
    #[serde(rename = "sSphHMC")]
    SSphHmc,
    #[serde(rename = "SphLMC")]
    SphLmc,
}

impl KernelKind {
    pub const ALL: [KernelKind; 6] =
        [Self::Rwm, Self::WallHmcBox, Self::WallHmcDiamond, Self::CSphHmc, Self::SSphHmc, Self::SphLmc];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rwm => "RWM",
            Self::WallHmcBox => "WallHMC-box",
            Self::WallHmcDiamond => "WallHMC-diamond",
            Self::CSphHmc => "cSphHMC",
            Self::SSphHmc => "sSphHMC",
            Self::SphLmc => "SphLMC",
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown kernel '{s}'")))
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One recorded draw on the original domain.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub beta: Vec<f64>,
    /// `log|d beta / d theta_S|` at `beta`; zero for kernels that sample the
    /// domain directly.
    pub log_weight: f64,
    pub accepted: bool,
    /// `H(proposal) - H(current)`; `+inf` for proposals rejected before the
    /// Metropolis test.
    pub hamiltonian_delta: f64,
}

/// Event counts accumulated over a chain.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub proposals: u64,
    pub accepted: u64,
    pub constraint_rejections: u64,
    pub pole_rejections: u64,
    pub gradient_failures: u64,
    pub bounce_guard_rejections: u64,
    pub bounces: u64,
}

/// A Markov transition kernel over some internal state.
pub trait Kernel: Send + Sync {
    type State: Clone + Send;

    fn kind(&self) -> KernelKind;

    fn dim(&self) -> usize;

    /// Starting state at `beta0`, or the kernel's default centre.
    fn initial_state(&self, beta0: Option<&[f64]>) -> Result<Self::State>;

    fn transition<R: Rng + ?Sized>(
        &self,
        state: &mut Self::State,
        rng: &mut R,
        counters: &mut Counters,
    ) -> Result<WeightedSample>;
}

/// Metropolis decision in log space; NaN energies reject.
pub(crate) fn metropolis<R: Rng + ?Sized>(delta_h: f64, rng: &mut R) -> bool {
    if delta_h.is_nan() {
        return false;
    }
    delta_h <= 0.0 || rng.random::<f64>().ln() < -delta_h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Total transitions `N`, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Independent stream index, so chains sharing a seed differ.
    #[serde(default)]
    pub stream: u64,
    #[serde(default)]
    pub init: Option<Vec<f64>>,
}

impl ChainConfig {
    pub fn new(iterations: usize, burn_in: usize, seed: u64) -> Self {
        Self { iterations, burn_in, seed, stream: 0, init: None }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub kernel: KernelKind,
    pub dim: usize,
    pub samples: Vec<WeightedSample>,
    /// Counters over the recorded iterations only.
    pub counters: Counters,
    /// Wall-clock seconds of the recorded sampling loop.
    pub elapsed_secs: f64,
    pub config: ChainConfig,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.counters.proposals == 0 {
            0.0
        } else {
            self.counters.accepted as f64 / self.counters.proposals as f64
        }
    }

    pub fn sec_per_iter(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.elapsed_secs / self.samples.len() as f64
        }
    }

    /// Values of coordinate `j` across the recorded samples.
    pub fn series(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.beta[j]).collect()
    }
}

/// Runs `B` burn-in and `N - B` recorded transitions. Deterministic for a
/// fixed seed and stream.
pub fn run_chain<K: Kernel>(kernel: &K, config: &ChainConfig) -> Result<Chain> {
    if config.burn_in > config.iterations {
        return Err(Error::InvalidConfig(format!(
            "burn-in {} exceeds iterations {}",
            config.burn_in, config.iterations
        )));
    }
    let mut rng = config.rng();
    let mut state = kernel.initial_state(config.init.as_deref())?;
    let mut scratch = Counters::default();
    let at = |iteration: usize| move |e: Error| Error::AtIteration { iteration, source: Box::new(e) };
    for it in 0..config.burn_in {
        kernel.transition(&mut state, &mut rng, &mut scratch).map_err(at(it))?;
    }
    let mut counters = Counters::default();
    let mut samples = Vec::with_capacity(config.iterations - config.burn_in);
    let start = Instant::now();
    for it in config.burn_in..config.iterations {
        samples.push(kernel.transition(&mut state, &mut rng, &mut counters).map_err(at(it))?);
    }
    Ok(Chain {
        kernel: kernel.kind(),
        dim: kernel.dim(),
        samples,
        counters,
        elapsed_secs: start.elapsed().as_secs_f64(),
        config: config.clone(),
    })
}

/// Multinomial resampling by importance weight; returns `n` draws.
pub fn resample<R: Rng + ?Sized>(samples: &[WeightedSample], n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let max = samples
        .iter()
        .map(|s| s.log_weight.clamp(-LOG_WEIGHT_CLAMP, LOG_WEIGHT_CLAMP))
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = samples
        .iter()
        .map(|s| (s.log_weight.clamp(-LOG_WEIGHT_CLAMP, LOG_WEIGHT_CLAMP) - max).exp())
        .collect();
    let dist = WeightedIndex::new(&w).map_err(|_| Error::AllWeightsZero)?;
    Ok((0..n).map(|_| samples[dist.sample(rng)].beta.clone()).collect())
}

/// Coarse grid search over step sizes with short pilot chains. Returns the
/// largest step whose acceptance lies in `[0.6, 0.9]`, falling back to the
/// one closest to 0.75, together with its acceptance rate.
pub fn tune_step_size<K, F>(grid: &[f64], pilot: &ChainConfig, mut make: F) -> Result<(f64, f64)>
where
    K: Kernel,
    F: FnMut(f64) -> Result<K>,
{
    let mut results = Vec::with_capacity(grid.len());
    for &eps in grid {
        let chain = run_chain(&make(eps)?, pilot)?;
        results.push((eps, chain.acceptance_rate()));
    }
    let in_band = results
        .iter()
        .filter(|(_, a)| (0.6..=0.9).contains(a))
        .max_by(|a, b| a.0.total_cmp(&b.0));
    let best = in_band.or_else(|| results.iter().min_by(|a, b| (a.1 - 0.75).abs().total_cmp(&(b.1 - 0.75).abs())));
    best.copied().ok_or_else(|| Error::InvalidConfig("empty step-size grid".into()))
}
