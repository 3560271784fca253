//! Split geodesic integrators on the sphere: velocity half-steps in the
//! tangent space and exact great-circle flow, in Cartesian and spherical
//! coordinates.

mod product;
mod trace;

pub use product::{Integrator, ProductState, StepFailure};
pub use trace::TrajectoryWriter;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::sphere::{pull_velocity, push_velocity, sphere_to_angles};
use crate::linalg::{dot, norm2};

/// Coordinates below this many radians from a pole abort an s-SphHMC trajectory.
pub const POLE_REJECT: f64 = 1e-8;

const TAYLOR_SPEED: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Cartesian,
    Spherical,
}

/// A point on the sphere together with a velocity in the matching chart.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub representation: Representation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub step_size: f64,
    pub leapfrog_steps: usize,
    /// Per-coordinate times `[eps, eps^2, ..., eps^D]` in the spherical
    /// velocity update.
    pub epsilon_vector: bool,
}

impl IntegratorConfig {
    pub fn new(step_size: f64, leapfrog_steps: usize) -> Result<Self> {
        let c = Self { step_size, leapfrog_steps, epsilon_vector: false };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidConfig(format!("step size {} must be positive", self.step_size)));
        }
        if self.leapfrog_steps == 0 {
            return Err(Error::InvalidConfig("need at least one leapfrog step".into()));
        }
        Ok(())
    }
}

/// `(I - theta theta^T) z` for a standard normal `z`.
pub fn sample_tangent_velocity<R: Rng + ?Sized>(theta_tilde: &[f64], rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..theta_tilde.len()).map(|_| rng.sample(StandardNormal)).collect();
    project_tangent(theta_tilde, &mut v);
    v
}

/// Removes the normal component of `v` at `theta_tilde`.
pub fn project_tangent(theta_tilde: &[f64], v: &mut [f64]) {
    let c = dot(theta_tilde, v);
    for (vi, ti) in v.iter_mut().zip(theta_tilde) {
        *vi -= c * ti;
    }
}

/// `v -= eps/2 ([I; 0^T] - theta_tilde theta^T) grad`, where `grad` is the
/// gradient with respect to the ball coordinates `theta = theta_tilde[..D]`.
pub fn velocity_half_step_cartesian(theta_tilde: &[f64], v: &mut [f64], grad: &[f64], eps: f64) {
    let d = grad.len();
    let tg = dot(&theta_tilde[..d], grad);
    let h = 0.5 * eps;
    for i in 0..d {
        v[i] -= h * (grad[i] - theta_tilde[i] * tg);
    }
    v[d] += h * theta_tilde[d] * tg;
}

/// Great-circle flow for time `t`. The position is renormalized and the
/// velocity re-projected afterwards to stop rounding drift.
pub fn geodesic_flow(theta_tilde: &mut [f64], v: &mut [f64], t: f64) {
    let speed = norm2(v);
    if speed < TAYLOR_SPEED {
        let s2 = speed * speed;
        for (x, vi) in theta_tilde.iter_mut().zip(v.iter_mut()) {
            let x0 = *x;
            *x = x0 * (1.0 - 0.5 * s2 * t * t) + *vi * t;
            *vi -= x0 * s2 * t;
        }
    } else {
        let (s, c) = (speed * t).sin_cos();
        for (x, vi) in theta_tilde.iter_mut().zip(v.iter_mut()) {
            let (x0, v0) = (*x, *vi);
            *x = x0 * c + v0 / speed * s;
            *vi = -x0 * speed * s + v0 * c;
        }
    }
    let n = norm2(theta_tilde);
    theta_tilde.iter_mut().for_each(|x| *x /= n);
    project_tangent(theta_tilde, v);
}

/// One leapfrog step of c-SphHMC. `grad` maps `theta_tilde` to the gradient
/// with respect to the ball coordinates.
pub fn leapfrog_step_cartesian<F>(theta_tilde: &mut [f64], v: &mut [f64], mut grad: F, eps: f64) -> Result<()>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let g = grad(theta_tilde)?;
    velocity_half_step_cartesian(theta_tilde, v, &g, eps);
    geodesic_flow(theta_tilde, v, eps);
    let g = grad(theta_tilde)?;
    velocity_half_step_cartesian(theta_tilde, v, &g, eps);
    Ok(())
}

/// `v_d -= eps_d/2 * dU/dtheta_d * prod_{i<d} sin^{-2} theta_i`, with
/// `eps_d = eps^d` in vector mode and `eps` otherwise.
pub fn velocity_half_step_spherical(theta: &[f64], v: &mut [f64], grad: &[f64], eps: f64, epsilon_vector: bool) -> Result<()> {
    let mut prod = 1.0;
    let mut eps_d = eps;
    for d in 0..theta.len() {
        if prod < f64::MIN_POSITIVE {
            return Err(Error::PoleSingularity(prod.sqrt()));
        }
        let step = if epsilon_vector { eps_d } else { eps };
        v[d] -= 0.5 * step * grad[d] / prod;
        let s = theta[d].sin();
        prod *= s * s;
        eps_d *= eps;
    }
    Ok(())
}

/// Diagonal of the round metric `[1, sin^2 theta_1, ...]`.
pub fn round_metric_diag(theta: &[f64]) -> Vec<f64> {
    let mut prod = 1.0;
    theta
        .iter()
        .map(|t| {
            let g = prod;
            prod *= t.sin().powi(2);
            g
        })
        .collect()
}

/// `v^T G_Sr v / 2`.
pub fn spherical_kinetic(theta: &[f64], v: &[f64]) -> f64 {
    0.5 * round_metric_diag(theta).iter().zip(v).map(|(g, vi)| g * vi * vi).sum::<f64>()
}

/// Push to the embedding, flow along the great circle, pull back. Fails
/// when a non-final angle lands within [`POLE_REJECT`] of a pole.
pub fn geodesic_flow_spherical(theta: &[f64], v: &[f64], eps: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut x, mut xdot) = push_velocity(theta, v);
    project_tangent(&x, &mut xdot);
    geodesic_flow(&mut x, &mut xdot, eps);
    let theta = sphere_to_angles(&x);
    let d = theta.len();
    for t in &theta[..d.saturating_sub(1)] {
        let s = t.sin();
        if s < POLE_REJECT {
            return Err(Error::PoleSingularity(s));
        }
    }
    let v_new = pull_velocity(&x, &xdot);
    Ok((theta, v_new))
}
