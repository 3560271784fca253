//! Lagrangian Monte Carlo on the positive orthant of the sphere for
//! simplex-constrained posteriors, with the Fisher metric `4 n G`.

use rand::Rng;

use super::{metropolis, Counters, Kernel, KernelKind, WeightedSample};
use crate::dynamics::{geodesic_flow, sample_tangent_velocity, IntegratorConfig};
use crate::error::Result;
use crate::linalg::norm2_sq;
use crate::targets::DirichletMultinomial;

/// Sampler over `theta = sqrt(pi)`; emits `pi = theta^2` with zero log-weight
/// since the volume term is part of the potential.
pub struct SphLmc {
    model: DirichletMultinomial,
    config: IntegratorConfig,
    /// Metric scale `n`; totals below one use one so empty counts still
    /// give a proper metric.
    scale: f64,
    shifted: Vec<f64>,
    shifted_total: f64,
}

impl SphLmc {
    pub fn new(model: DirichletMultinomial, config: IntegratorConfig) -> Result<Self> {
        config.validate()?;
        let scale = model.total_count().max(1.0);
        let shifted = model.shifted_counts();
        let shifted_total = shifted.iter().sum();
        Ok(Self { model, config, scale, shifted, shifted_total })
    }

    /// `v += eps/2 [c/theta - theta C] / (2n)`, the natural-gradient half step.
    fn half_step(&self, theta: &[f64], v: &mut [f64]) -> bool {
        let h = 0.25 * self.config.step_size / self.scale;
        for ((vi, t), c) in v.iter_mut().zip(theta).zip(&self.shifted) {
            *vi += h * (c / t - t * self.shifted_total);
        }
        v.iter().all(|x| x.is_finite())
    }

    fn energy(&self, theta: &[f64], v: &[f64]) -> f64 {
        self.model.phi(theta) + 2.0 * self.scale * norm2_sq(v)
    }

    fn emit(theta: &[f64], accepted: bool, delta: f64) -> WeightedSample {
        let mut pi: Vec<f64> = theta.iter().map(|t| t * t).collect();
        let s: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= s);
        WeightedSample { beta: pi, log_weight: 0.0, accepted, hamiltonian_delta: delta }
    }
}

impl Kernel for SphLmc {
    type State = Vec<f64>;

    fn kind(&self) -> KernelKind {
        KernelKind::SphLmc
    }

    fn dim(&self) -> usize {
        self.shifted.len()
    }

    /// The barycentre `sqrt(1/K)` unless a point `pi0` on the simplex is given.
    fn initial_state(&self, pi0: Option<&[f64]>) -> Result<Vec<f64>> {
        let k = self.dim();
        match pi0 {
            Some(p) => {
                crate::error::check_dim(k, p.len())?;
                let s: f64 = p.iter().sum();
                if p.iter().any(|&x| x < 0.0) || (s - 1.0).abs() > 1e-9 {
                    return Err(crate::Error::DomainViolation("initial point is not on the simplex".into()));
                }
                Ok(p.iter().map(|x| (x / s).sqrt()).collect())
            }
            None => Ok(vec![(1.0 / k as f64).sqrt(); k]),
        }
    }

    fn transition<R: Rng + ?Sized>(
        &self,
        theta: &mut Vec<f64>,
        rng: &mut R,
        counters: &mut Counters,
    ) -> Result<WeightedSample> {
        counters.proposals += 1;
        let mut v = sample_tangent_velocity(theta, rng);
        let s = 0.5 / self.scale.sqrt();
        v.iter_mut().for_each(|x| *x *= s);
        let h0 = self.energy(theta, &v);
        let mut x = theta.clone();
        let mut ok = true;
        for _ in 0..self.config.leapfrog_steps {
            ok &= self.half_step(&x, &mut v);
            geodesic_flow(&mut x, &mut v, self.config.step_size);
            for (xi, vi) in x.iter_mut().zip(v.iter_mut()) {
                if *xi < 0.0 {
                    *xi = -*xi;
                    *vi = -*vi;
                }
            }
            ok &= self.half_step(&x, &mut v);
            if !ok {
                break;
            }
        }
        if !ok {
            counters.gradient_failures += 1;
            return Ok(Self::emit(theta, false, f64::INFINITY));
        }
        let delta = self.energy(&x, &v) - h0;
        let accepted = metropolis(delta, rng);
        if accepted {
            counters.accepted += 1;
            *theta = x;
        }
        Ok(Self::emit(theta, accepted, delta))
    }
}
