//! HMC with reflecting walls: coordinate-wise folding for boxes and the
//! facet reflection scheme for the 1-norm ball.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{metropolis, Counters, Kernel, KernelKind, WeightedSample};
use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::geometry::ConstraintSpec;
use crate::linalg::{dot, norm1, norm2, norm2_sq, sign};
use crate::targets::Target;

/// Proposals needing more reflections than this within one position update are rejected.
pub const MAX_BOUNCES: usize = 1000;

#[derive(Debug, Clone)]
pub struct WallState {
    x: Vec<f64>,
    potential: f64,
}

/// Folds `x` back into `[lower, upper]` coordinate-wise, negating the
/// matching velocity components. Returns the number of reflections, or
/// `None` if [`MAX_BOUNCES`] is exceeded.
pub fn reflect_box(x: &mut [f64], v: &mut [f64], lower: &[f64], upper: &[f64]) -> Option<usize> {
    let mut bounces = 0;
    for i in 0..x.len() {
        loop {
            if x[i] < lower[i] {
                x[i] = 2.0 * lower[i] - x[i];
            } else if x[i] > upper[i] {
                x[i] = 2.0 * upper[i] - x[i];
            } else {
                break;
            }
            v[i] = -v[i];
            bounces += 1;
            if bounces > MAX_BOUNCES {
                return None;
            }
        }
    }
    Some(bounces)
}

/// Wall HMC on a product of intervals (box, one-sided, or blocks of these).
pub struct WallHmcBox<T> {
    target: T,
    spec: ConstraintSpec,
    lower: Vec<f64>,
    upper: Vec<f64>,
    config: IntegratorConfig,
}

impl<T: Target> WallHmcBox<T> {
    pub fn new(target: T, spec: ConstraintSpec, config: IntegratorConfig) -> Result<Self> {
        spec.validate()?;
        config.validate()?;
        crate::error::check_dim(spec.dim(), target.dim())?;
        let (lower, upper) = spec.interval_bounds().ok_or_else(|| Error::Unsupported {
            kernel: "WallHMC-box",
            what: "constraints that are not products of intervals".into(),
        })?;
        Ok(Self { target, spec, lower, upper, config })
    }
}

fn gradient<T: Target>(target: &T, x: &[f64], scale: f64) -> Option<Vec<f64>> {
    let mut g = vec![0.0; x.len()];
    let xs: Vec<f64> = x.iter().map(|v| v * scale).collect();
    target.gradient(&xs, &mut g);
    g.iter_mut().for_each(|v| *v *= scale);
    g.iter().all(|v| v.is_finite()).then_some(g)
}

impl<T: Target> Kernel for WallHmcBox<T> {
    type State = WallState;

    fn kind(&self) -> KernelKind {
        KernelKind::WallHmcBox
    }

    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn initial_state(&self, beta0: Option<&[f64]>) -> Result<WallState> {
        let x = match beta0 {
            Some(b) => b.to_vec(),
            None => self
                .lower
                .iter()
                .zip(&self.upper)
                .map(|(&l, &u)| match (l.is_finite(), u.is_finite()) {
                    (true, true) => 0.5 * (l + u),
                    (true, false) => l + 1.0,
                    (false, true) => u - 1.0,
                    (false, false) => 0.0,
                })
                .collect(),
        };
        if !self.spec.contains(&x, 0.0) {
            return Err(Error::DomainViolation("initial point violates the constraint".into()));
        }
        let potential = self.target.potential(&x);
        Ok(WallState { x, potential })
    }

    fn transition<R: Rng + ?Sized>(
        &self,
        state: &mut WallState,
        rng: &mut R,
        counters: &mut Counters,
    ) -> Result<WeightedSample> {
        counters.proposals += 1;
        let eps = self.config.step_size;
        let mut x = state.x.clone();
        let mut p: Vec<f64> = (0..x.len()).map(|_| rng.sample(StandardNormal)).collect();
        let h0 = state.potential + 0.5 * norm2_sq(&p);
        let reject = |state: &WallState| WeightedSample {
            beta: state.x.clone(),
            log_weight: 0.0,
            accepted: false,
            hamiltonian_delta: f64::INFINITY,
        };
        let Some(mut g) = gradient(&self.target, &x, 1.0) else {
            counters.gradient_failures += 1;
            return Ok(reject(state));
        };
        for _ in 0..self.config.leapfrog_steps {
            for (pi, gi) in p.iter_mut().zip(&g) {
                *pi -= 0.5 * eps * gi;
            }
            for (xi, pi) in x.iter_mut().zip(&p) {
                *xi += eps * pi;
            }
            match reflect_box(&mut x, &mut p, &self.lower, &self.upper) {
                Some(b) => counters.bounces += b as u64,
                None => {
                    counters.bounce_guard_rejections += 1;
                    return Ok(reject(state));
                }
            }
            g = match gradient(&self.target, &x, 1.0) {
                Some(g) => g,
                None => {
                    counters.gradient_failures += 1;
                    return Ok(reject(state));
                }
            };
            for (pi, gi) in p.iter_mut().zip(&g) {
                *pi -= 0.5 * eps * gi;
            }
        }
        let u = self.target.potential(&x);
        let delta = u + 0.5 * norm2_sq(&p) - h0;
        if !self.spec.contains(&x, 0.0) {
            counters.constraint_rejections += 1;
            return Ok(reject(state));
        }
        let accepted = metropolis(delta, rng);
        if accepted {
            counters.accepted += 1;
            state.x = x;
            state.potential = u;
        }
        Ok(WeightedSample { beta: state.x.clone(), log_weight: 0.0, accepted, hamiltonian_delta: delta })
    }
}

/// Outcome of resolving the wall crossings of one position update.
#[derive(Debug, Clone, PartialEq)]
pub struct DiamondMove {
    /// Final position inside the diamond.
    pub theta: Vec<f64>,
    /// Last wall hitting point, or the start when no wall was hit.
    pub last_hit: Vec<f64>,
    pub bounces: usize,
}

/// Moves from `theta0` (inside `|theta|_1 <= 1`) towards `theta`, reflecting
/// off the facets of the unit 1-norm ball until the end point is inside.
///
/// Crossing times with the coordinate planes, together with the two end
/// points, split the segment into pieces lying in a single orthant; the
/// first piece whose end leaves the ball fixes the facet normal.
pub fn diamond_reflect(theta0: &[f64], theta: &[f64]) -> Option<DiamondMove> {
    let d = theta.len();
    let mut a = theta0.to_vec();
    let mut b = theta.to_vec();
    let mut bounces = 0;
    while norm1(&b) > 1.0 {
        if bounces >= MAX_BOUNCES {
            return None;
        }
        let mut times: Vec<f64> = (0..d)
            .filter(|&i| a[i] != b[i])
            .map(|i| a[i] / (a[i] - b[i]))
            .filter(|t| *t > 0.0 && *t < 1.0)
            .collect();
        times.sort_by(f64::total_cmp);
        times.push(1.0);
        let point = |t: f64| -> Vec<f64> { a.iter().zip(&b).map(|(x, y)| x + (y - x) * t).collect() };
        let mut prev = a.clone();
        let mut normal = None;
        for &t in &times {
            let cur = if t == 1.0 { b.clone() } else { point(t) };
            if norm1(&cur) > 1.0 {
                normal = Some(cur.iter().zip(&prev).map(|(c, p)| sign(sign(*c) + sign(*p))).collect::<Vec<f64>>());
                break;
            }
            prev = cur;
        }
        let n = normal?;
        let nn = norm2_sq(&n);
        let step: Vec<f64> = b.iter().zip(&a).map(|(y, x)| y - x).collect();
        let denom = dot(&n, &step);
        if nn == 0.0 || denom == 0.0 {
            return None;
        }
        let t_star = (1.0 - dot(&n, &a)) / denom;
        let hit: Vec<f64> = a.iter().zip(&step).map(|(x, s)| x + s * t_star).collect();
        let overshoot = dot(&n, &b) - 1.0;
        for (bi, ni) in b.iter_mut().zip(&n) {
            *bi -= 2.0 * ni * overshoot / nn;
        }
        a = hit;
        bounces += 1;
    }
    Some(DiamondMove { theta: b, last_hit: if bounces > 0 { a } else { theta0.to_vec() }, bounces })
}

/// Wall HMC inside `|beta|_1 <= radius`, run on `theta = beta / radius`.
pub struct WallHmcDiamond<T> {
    target: T,
    radius: f64,
    config: IntegratorConfig,
}

impl<T: Target> WallHmcDiamond<T> {
    pub fn new(target: T, spec: &ConstraintSpec, config: IntegratorConfig) -> Result<Self> {
        spec.validate()?;
        config.validate()?;
        let radius = match spec {
            ConstraintSpec::QNormBall { q, radius, .. } if *q == 1.0 => *radius,
            _ => {
                return Err(Error::Unsupported { kernel: "WallHMC-diamond", what: "constraints other than the 1-norm ball".into() })
            }
        };
        crate::error::check_dim(spec.dim(), target.dim())?;
        Ok(Self { target, radius, config })
    }

    fn emit(&self, state: &WallState, accepted: bool, delta: f64) -> WeightedSample {
        WeightedSample {
            beta: state.x.iter().map(|t| t * self.radius).collect(),
            log_weight: 0.0,
            accepted,
            hamiltonian_delta: delta,
        }
    }

    fn potential(&self, theta: &[f64]) -> f64 {
        let beta: Vec<f64> = theta.iter().map(|t| t * self.radius).collect();
        self.target.potential(&beta)
    }
}

impl<T: Target> Kernel for WallHmcDiamond<T> {
    type State = WallState;

    fn kind(&self) -> KernelKind {
        KernelKind::WallHmcDiamond
    }

    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn initial_state(&self, beta0: Option<&[f64]>) -> Result<WallState> {
        let x: Vec<f64> = match beta0 {
            Some(b) => b.iter().map(|v| v / self.radius).collect(),
            None => vec![0.0; self.dim()],
        };
        if norm1(&x) > 1.0 {
            return Err(Error::DomainViolation("initial point outside the 1-norm ball".into()));
        }
        let potential = self.potential(&x);
        Ok(WallState { x, potential })
    }

    fn transition<R: Rng + ?Sized>(
        &self,
        state: &mut WallState,
        rng: &mut R,
        counters: &mut Counters,
    ) -> Result<WeightedSample> {
        counters.proposals += 1;
        let eps = self.config.step_size;
        let mut x = state.x.clone();
        let mut p: Vec<f64> = (0..x.len()).map(|_| rng.sample(StandardNormal)).collect();
        let h0 = state.potential + 0.5 * norm2_sq(&p);
        let Some(mut g) = gradient(&self.target, &x, self.radius) else {
            counters.gradient_failures += 1;
            return Ok(self.emit(state, false, f64::INFINITY));
        };
        for _ in 0..self.config.leapfrog_steps {
            for (pi, gi) in p.iter_mut().zip(&g) {
                *pi -= 0.5 * eps * gi;
            }
            let next: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + eps * pi).collect();
            let Some(mv) = diamond_reflect(&x, &next) else {
                counters.bounce_guard_rejections += 1;
                return Ok(self.emit(state, false, f64::INFINITY));
            };
            if mv.bounces > 0 {
                counters.bounces += mv.bounces as u64;
                let dir: Vec<f64> = mv.theta.iter().zip(&mv.last_hit).map(|(a, b)| a - b).collect();
                let len = norm2(&dir);
                if len > 0.0 {
                    let speed = norm2(&p);
                    p = dir.iter().map(|d| d * speed / len).collect();
                } else {
                    p.iter_mut().for_each(|v| *v = -*v);
                }
            }
            x = mv.theta;
            g = match gradient(&self.target, &x, self.radius) {
                Some(g) => g,
                None => {
                    counters.gradient_failures += 1;
                    return Ok(self.emit(state, false, f64::INFINITY));
                }
            };
            for (pi, gi) in p.iter_mut().zip(&g) {
                *pi -= 0.5 * eps * gi;
            }
        }
        let u = self.potential(&x);
        let delta = u + 0.5 * norm2_sq(&p) - h0;
        let accepted = metropolis(delta, rng);
        if accepted {
            counters.accepted += 1;
            state.x = x;
            state.potential = u;
        }
        Ok(self.emit(state, accepted, delta))
    }
}
