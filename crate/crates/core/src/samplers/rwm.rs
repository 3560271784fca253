use rand::Rng;
use rand_distr::StandardNormal;

use super::{metropolis, Counters, Kernel, KernelKind, WeightedSample};
use crate::error::{Error, Result};
use crate::geometry::ConstraintSpec;
use crate::targets::Target;

/// Gaussian random-walk Metropolis on the original domain; proposals that
/// leave the domain are rejected outright.
pub struct Rwm<T> {
    target: T,
    spec: ConstraintSpec,
    scale: f64,
}

#[derive(Debug, Clone)]
pub struct RwmState {
    beta: Vec<f64>,
    potential: f64,
}

impl<T: Target> Rwm<T> {
    pub fn new(target: T, spec: ConstraintSpec, scale: f64) -> Result<Self> {
        spec.validate()?;
        crate::error::check_dim(spec.dim(), target.dim())?;
        if !(scale > 0.0) {
            return Err(Error::InvalidConfig(format!("proposal scale {scale} must be positive")));
        }
        Ok(Self { target, spec, scale })
    }
}

/// A point well inside the domain used when no start is given.
pub(crate) fn default_start(spec: &ConstraintSpec) -> Result<Vec<f64>> {
    use crate::geometry::{Chart, Coordinates};
    let chart = Chart::new(spec, Coordinates::Cartesian)?;
    let pos = chart.initial_position(None)?;
    Ok(chart.map(&pos).beta)
}

impl<T: Target> Kernel for Rwm<T> {
    type State = RwmState;

    fn kind(&self) -> KernelKind {
        KernelKind::Rwm
    }

    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn initial_state(&self, beta0: Option<&[f64]>) -> Result<RwmState> {
        let beta = match beta0 {
            Some(b) => b.to_vec(),
            None => default_start(&self.spec)?,
        };
        if !self.spec.contains(&beta, 0.0) {
            return Err(Error::DomainViolation("initial point violates the constraint".into()));
        }
        let potential = self.target.potential(&beta);
        Ok(RwmState { beta, potential })
    }

    fn transition<R: Rng + ?Sized>(
        &self,
        state: &mut RwmState,
        rng: &mut R,
        counters: &mut Counters,
    ) -> Result<WeightedSample> {
        counters.proposals += 1;
        let prop: Vec<f64> = state
            .beta
            .iter()
            .map(|b| b + self.scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let (accepted, delta) = if !self.spec.contains(&prop, 0.0) {
            counters.constraint_rejections += 1;
            (false, f64::INFINITY)
        } else {
            let u = self.target.potential(&prop);
            let delta = u - state.potential;
            let acc = metropolis(delta, rng);
            if acc {
                state.beta = prop;
                state.potential = u;
            }
            (acc, delta)
        };
        if accepted {
            counters.accepted += 1;
        }
        Ok(WeightedSample { beta: state.beta.clone(), log_weight: 0.0, accepted, hamiltonian_delta: delta })
    }
}
