//! Autocorrelation, effective sample size, self-normalized weighted moments
//! and per-run efficiency summaries.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samplers::{Chain, WeightedSample, LOG_WEIGHT_CLAMP};

const MIN_SERIES: usize = 10;

/// Biased sample autocorrelation `rho(0..=max_lag)`, computed by FFT.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n < MIN_SERIES {
        return Err(Error::InvalidConfig(format!("autocorrelation needs at least {MIN_SERIES} points, got {n}")));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let m = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series.iter().map(|x| Complex::new(x - mean, 0.0)).collect();
    buf.resize(m, Complex::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let c0 = buf[0].re / (m as f64 * n as f64);
    if !(c0 > 1e-300) {
        return Err(Error::DegenerateSeries(c0.max(0.0)));
    }
    let lags = max_lag.min(n - 1);
    Ok((0..=lags).map(|k| buf[k].re / (m as f64 * n as f64) / c0).collect())
}

/// `N / (1 + 2 sum rho(k))`, summing from lag 1 up to (excluding) the first
/// negative autocorrelation, clipped to `[1, N]`. `rho[0]` is ignored.
pub fn ess_from_autocorrelation(rho: &[f64], n: usize) -> f64 {
    let s: f64 = rho.iter().skip(1).take_while(|&&r| r >= 0.0).sum();
    (n as f64 / (1.0 + 2.0 * s)).clamp(1.0, n as f64)
}

pub fn ess(series: &[f64]) -> Result<f64> {
    let rho = autocorrelation(series, series.len() - 1)?;
    Ok(ess_from_autocorrelation(&rho, series.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMoments {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    /// `(sum w)^2 / (N sum w^2)`.
    pub weight_eff: f64,
    /// Log-weights that fell outside `[-700, 700]`.
    pub clamped: usize,
}

/// Self-normalized estimates `sum w_i f(beta_i) / sum w_i` of the mean and
/// covariance.
pub fn weighted_moments(samples: &[WeightedSample]) -> Result<WeightedMoments> {
    if samples.len() < 2 {
        return Err(Error::InvalidConfig("weighted moments need at least two samples".into()));
    }
    let mut clamped = 0;
    let lw: Vec<f64> = samples
        .iter()
        .map(|s| {
            if s.log_weight.abs() > LOG_WEIGHT_CLAMP {
                clamped += 1;
            }
            if s.log_weight.is_nan() {
                f64::NEG_INFINITY
            } else {
                s.log_weight.clamp(-LOG_WEIGHT_CLAMP, LOG_WEIGHT_CLAMP)
            }
        })
        .collect();
    let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|l| (l - max).exp()).collect();
    let sw: f64 = w.iter().sum();
    if !(sw > 0.0) {
        return Err(Error::AllWeightsZero);
    }
    let d = samples[0].beta.len();
    let mut mean = vec![0.0; d];
    for (s, wi) in samples.iter().zip(&w) {
        for (m, b) in mean.iter_mut().zip(&s.beta) {
            *m += wi * b;
        }
    }
    mean.iter_mut().for_each(|m| *m /= sw);
    let mut cov = vec![vec![0.0; d]; d];
    for (s, wi) in samples.iter().zip(&w) {
        for i in 0..d {
            let di = s.beta[i] - mean[i];
            for j in 0..=i {
                cov[i][j] += wi * di * (s.beta[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            cov[i][j] /= sw;
            cov[j][i] = cov[i][j];
        }
    }
    let sw2: f64 = w.iter().map(|x| x * x).sum();
    Ok(WeightedMoments { mean, cov, weight_eff: sw * sw / (samples.len() as f64 * sw2), clamped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssSummary {
    pub min: f64,
    pub med: f64,
    pub max: f64,
}

/// Efficiency and moment summary of one kernel run. Serializes to the
/// report JSON layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub kernel: String,
    #[serde(rename = "D")]
    pub dim: usize,
    #[serde(rename = "AP")]
    pub acceptance: f64,
    pub sec_per_iter: f64,
    pub ess: EssSummary,
    pub min_ess_per_sec: f64,
    pub speedup_vs_baseline: Option<f64>,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub weight_eff: f64,
    #[serde(skip)]
    pub ess_per_param: Vec<f64>,
    #[serde(skip)]
    pub clamped_weights: usize,
    #[serde(skip)]
    pub samples: usize,
}

/// ESS of one coordinate; a chain that never moves counts as one sample.
fn coordinate_ess(series: &[f64]) -> Result<f64> {
    match ess(series) {
        Ok(e) => Ok(e),
        Err(Error::DegenerateSeries(_)) => Ok(1.0),
        Err(e) => Err(e),
    }
}

/// Summary over one or more independent chains of the same kernel. ESS is
/// summed across chains per coordinate, timings are summed, moments pooled.
pub fn efficiency_summary(chains: &[&Chain]) -> Result<ChainReport> {
    let first = chains.first().ok_or_else(|| Error::InvalidConfig("no chains to summarize".into()))?;
    let d = first.dim;
    let mut ess_per_param = vec![0.0; d];
    let mut wall = 0.0;
    let (mut proposals, mut accepted, mut n) = (0u64, 0u64, 0usize);
    for c in chains {
        wall += c.elapsed_secs;
        proposals += c.counters.proposals;
        accepted += c.counters.accepted;
        n += c.len();
        if c.len() >= MIN_SERIES {
            for (j, e) in ess_per_param.iter_mut().enumerate() {
                *e += coordinate_ess(&c.series(j))?;
            }
        }
    }
    let mut sorted = ess_per_param.clone();
    sorted.sort_by(f64::total_cmp);
    let ess = if sorted.is_empty() || n < MIN_SERIES {
        EssSummary { min: 0.0, med: 0.0, max: 0.0 }
    } else {
        let mid = sorted.len() / 2;
        let med = if sorted.len() % 2 == 1 { sorted[mid] } else { 0.5 * (sorted[mid - 1] + sorted[mid]) };
        EssSummary { min: sorted[0], med, max: sorted[sorted.len() - 1] }
    };
    let pooled: Vec<WeightedSample> = chains.iter().flat_map(|c| c.samples.iter().cloned()).collect();
    let (mean, cov, weight_eff, clamped) = if pooled.len() >= 2 {
        let m = weighted_moments(&pooled)?;
        (m.mean, m.cov, m.weight_eff, m.clamped)
    } else {
        (vec![f64::NAN; d], vec![vec![f64::NAN; d]; d], f64::NAN, 0)
    };
    Ok(ChainReport {
        kernel: first.kernel.name().to_string(),
        dim: d,
        acceptance: if proposals == 0 { 0.0 } else { accepted as f64 / proposals as f64 },
        sec_per_iter: if n == 0 { 0.0 } else { wall / n as f64 },
        ess,
        min_ess_per_sec: if wall > 0.0 { ess.min / wall } else { 0.0 },
        speedup_vs_baseline: None,
        mean,
        cov,
        weight_eff,
        ess_per_param,
        clamped_weights: clamped,
        samples: n,
    })
}

impl ChainReport {
    /// Sets `speedup_vs_baseline` to the ratio of time-normalized minimum ESS.
    pub fn with_baseline(mut self, baseline: &ChainReport) -> Self {
        self.speedup_vs_baseline = (baseline.min_ess_per_sec > 0.0).then(|| self.min_ess_per_sec / baseline.min_ess_per_sec);
        self
    }
}
