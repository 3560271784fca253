//! Spherical HMC in Cartesian (ball chart) and spherical (angle chart)
//! coordinates, over products of sphere, angle and flat blocks.

use rand::Rng;

use super::{metropolis, Counters, Kernel, KernelKind, WeightedSample};
use crate::dynamics::{Integrator, IntegratorConfig, ProductState, StepFailure, TrajectoryWriter};
use crate::error::Result;
use crate::geometry::{Chart, ConstraintSpec, Coordinates};
use crate::targets::Target;

const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SphState {
    pub pos: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub log_weight: f64,
    pub potential: f64,
}

/// c-SphHMC with [`Coordinates::Cartesian`], s-SphHMC with [`Coordinates::Spherical`].
pub struct SphHmc<T> {
    target: T,
    spec: ConstraintSpec,
    chart: Chart,
    coords: Coordinates,
    config: IntegratorConfig,
}

impl<T: Target> SphHmc<T> {
    pub fn new(target: T, spec: ConstraintSpec, coords: Coordinates, config: IntegratorConfig) -> Result<Self> {
        config.validate()?;
        let chart = Chart::new(&spec, coords)?;
        crate::error::check_dim(chart.dim(), target.dim())?;
        Ok(Self { target, spec, chart, coords, config })
    }

    pub fn cartesian(target: T, spec: ConstraintSpec, config: IntegratorConfig) -> Result<Self> {
        Self::new(target, spec, Coordinates::Cartesian, config)
    }

    pub fn spherical(target: T, spec: ConstraintSpec, config: IntegratorConfig) -> Result<Self> {
        Self::new(target, spec, Coordinates::Spherical, config)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn integrator(&self) -> Integrator<'_, T> {
        Integrator::new(&self.chart, &self.target, self.config)
    }

    fn state_at(&self, pos: Vec<Vec<f64>>) -> SphState {
        let m = self.chart.map(&pos);
        let potential = self.target.potential(&m.beta);
        SphState { pos, beta: m.beta, log_weight: m.log_weight, potential }
    }

    /// Runs one proposal trajectory from `state` with a fresh velocity and
    /// records every leapfrog step, without a Metropolis decision.
    pub fn trace_trajectory<R: Rng + ?Sized>(&self, state: &SphState, rng: &mut R) -> TrajectoryWriter {
        let integ = self.integrator();
        let mut ps = ProductState { pos: state.pos.clone(), vel: integ.sample_velocity(&state.pos, rng) };
        let mut w = TrajectoryWriter::new();
        let _ = integ.trajectory(&mut ps, Some(&mut w));
        w
    }

    fn emit(state: &SphState, accepted: bool, delta: f64) -> WeightedSample {
        WeightedSample {
            beta: state.beta.clone(),
            log_weight: state.log_weight,
            accepted,
            hamiltonian_delta: delta,
        }
    }
}

impl<T: Target> Kernel for SphHmc<T> {
    type State = SphState;

    fn kind(&self) -> KernelKind {
        match self.coords {
            Coordinates::Cartesian => KernelKind::CSphHmc,
            Coordinates::Spherical => KernelKind::SSphHmc,
        }
    }

    fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn initial_state(&self, beta0: Option<&[f64]>) -> Result<SphState> {
        Ok(self.state_at(self.chart.initial_position(beta0)?))
    }

    fn transition<R: Rng + ?Sized>(
        &self,
        state: &mut SphState,
        rng: &mut R,
        counters: &mut Counters,
    ) -> Result<WeightedSample> {
        counters.proposals += 1;
        let integ = self.integrator();
        let vel = integ.sample_velocity(&state.pos, rng);
        let mut ps = ProductState { pos: state.pos.clone(), vel };
        let h0 = state.potential + integ.kinetic(&ps);
        match integ.trajectory(&mut ps, None) {
            Ok(()) => {}
            Err(StepFailure::Pole) => {
                counters.pole_rejections += 1;
                return Ok(Self::emit(state, false, f64::INFINITY));
            }
            Err(StepFailure::Gradient) => {
                counters.gradient_failures += 1;
                return Ok(Self::emit(state, false, f64::INFINITY));
            }
        }
        let proposal = self.state_at(ps.pos.clone());
        let delta = proposal.potential + integ.kinetic(&ps) - h0;
        if !self.spec.contains(&proposal.beta, MEMBERSHIP_TOL) {
            counters.constraint_rejections += 1;
            return Ok(Self::emit(state, false, delta));
        }
        let accepted = metropolis(delta, rng);
        if accepted {
            counters.accepted += 1;
            *state = proposal;
        }
        Ok(Self::emit(state, accepted, delta))
    }
}
