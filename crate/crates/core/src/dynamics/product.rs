//! Leapfrog integration on a product of sphere, angle and flat blocks as
//! laid out by a [`Chart`].

use rand::Rng;
use rand_distr::StandardNormal;

use super::{
    geodesic_flow, geodesic_flow_spherical, project_tangent, round_metric_diag, velocity_half_step_cartesian,
    velocity_half_step_spherical, IntegratorConfig, TrajectoryWriter,
};
use crate::geometry::chart::{Chart, Patch};
use crate::linalg::norm2_sq;
use crate::targets::Target;

/// Per-block positions and velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    pub pos: Vec<Vec<f64>>,
    pub vel: Vec<Vec<f64>>,
}

impl ProductState {
    pub fn negate_velocity(&mut self) {
        self.vel.iter_mut().flatten().for_each(|v| *v = -*v);
    }
}

/// Why a trajectory was abandoned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepFailure {
    /// An angle came within the pole tolerance.
    Pole,
    /// The potential gradient was not finite.
    Gradient,
}

pub struct Integrator<'a, T: Target + ?Sized> {
    pub chart: &'a Chart,
    pub target: &'a T,
    pub config: IntegratorConfig,
}

impl<'a, T: Target + ?Sized> Integrator<'a, T> {
    pub fn new(chart: &'a Chart, target: &'a T, config: IntegratorConfig) -> Self {
        Self { chart, target, config }
    }

    pub fn potential(&self, pos: &[Vec<f64>]) -> f64 {
        self.target.potential(&self.chart.point(pos))
    }

    pub fn gradient(&self, pos: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, StepFailure> {
        let beta = self.chart.point(pos);
        let mut g = vec![0.0; beta.len()];
        self.target.gradient(&beta, &mut g);
        if g.iter().any(|x| !x.is_finite()) {
            return Err(StepFailure::Gradient);
        }
        let out = self.chart.pullback(pos, &g);
        if out.iter().flatten().any(|x| !x.is_finite()) {
            return Err(StepFailure::Gradient);
        }
        Ok(out)
    }

    /// Fresh velocities: tangent-projected normals on sphere blocks,
    /// `N(0, G_Sr^{-1})` on angle blocks, standard normals on flat blocks.
    pub fn sample_velocity<R: Rng + ?Sized>(&self, pos: &[Vec<f64>], rng: &mut R) -> Vec<Vec<f64>> {
        self.chart
            .blocks()
            .iter()
            .zip(pos)
            .map(|(blk, p)| {
                let mut z: Vec<f64> = (0..p.len()).map(|_| rng.sample(StandardNormal)).collect();
                match blk.patch {
                    Patch::Ball(_) => project_tangent(p, &mut z),
                    Patch::Angles(_) => {
                        for (zi, g) in z.iter_mut().zip(round_metric_diag(p)) {
                            *zi /= g.sqrt();
                        }
                    }
                    Patch::Flat(_) => {}
                }
                z
            })
            .collect()
    }

    pub fn kinetic(&self, state: &ProductState) -> f64 {
        self.chart
            .blocks()
            .iter()
            .zip(state.pos.iter().zip(&state.vel))
            .map(|(blk, (p, v))| match blk.patch {
                Patch::Ball(_) | Patch::Flat(_) => 0.5 * norm2_sq(v),
                Patch::Angles(_) => {
                    0.5 * round_metric_diag(p).iter().zip(v).map(|(g, vi)| g * vi * vi).sum::<f64>()
                }
            })
            .sum()
    }

    pub fn hamiltonian(&self, state: &ProductState) -> f64 {
        self.potential(&state.pos) + self.kinetic(state)
    }

    pub fn half_step(&self, state: &mut ProductState, grads: &[Vec<f64>]) -> Result<(), StepFailure> {
        let eps = self.config.step_size;
        for (blk, ((p, v), g)) in self.chart.blocks().iter().zip(state.pos.iter().zip(state.vel.iter_mut()).zip(grads)) {
            match blk.patch {
                Patch::Ball(_) => velocity_half_step_cartesian(p, v, g, eps),
                Patch::Angles(_) => velocity_half_step_spherical(p, v, g, eps, self.config.epsilon_vector)
                    .map_err(|_| StepFailure::Pole)?,
                Patch::Flat(_) => {
                    for (vi, gi) in v.iter_mut().zip(g) {
                        *vi -= 0.5 * eps * gi;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn position_step(&self, state: &mut ProductState) -> Result<(), StepFailure> {
        let eps = self.config.step_size;
        for (blk, (p, v)) in self.chart.blocks().iter().zip(state.pos.iter_mut().zip(state.vel.iter_mut())) {
            match blk.patch {
                Patch::Ball(_) => geodesic_flow(p, v, eps),
                Patch::Angles(_) => {
                    let (t, w) = geodesic_flow_spherical(p, v, eps).map_err(|_| StepFailure::Pole)?;
                    *p = t;
                    *v = w;
                }
                Patch::Flat(_) => {
                    for (x, vi) in p.iter_mut().zip(v.iter()) {
                        *x += eps * vi;
                    }
                }
            }
        }
        Ok(())
    }

    /// One leapfrog step: half velocity step, position flow, half velocity step.
    pub fn leapfrog(&self, state: &mut ProductState) -> Result<(), StepFailure> {
        let g = self.gradient(&state.pos)?;
        self.half_step(state, &g)?;
        self.position_step(state)?;
        let g = self.gradient(&state.pos)?;
        self.half_step(state, &g)
    }

    /// `L` leapfrog steps reusing the end-point gradient of each step.
    pub fn trajectory(
        &self,
        state: &mut ProductState,
        mut trace: Option<&mut TrajectoryWriter>,
    ) -> Result<(), StepFailure> {
        let mut g = self.gradient(&state.pos)?;
        if let Some(w) = trace.as_deref_mut() {
            let h = self.hamiltonian(state);
            w.record(0, state, h);
        }
        for step in 1..=self.config.leapfrog_steps {
            self.half_step(state, &g)?;
            self.position_step(state)?;
            g = self.gradient(&state.pos)?;
            self.half_step(state, &g)?;
            if let Some(w) = trace.as_deref_mut() {
                let h = self.hamiltonian(state);
                w.record(step, state, h);
            }
        }
        Ok(())
    }
}
