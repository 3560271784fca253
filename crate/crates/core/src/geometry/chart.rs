//! Composition of the per-block transforms into a single chart from the
//! sampler's coordinates to the constrained domain.
//!
//! Ball blocks live on a sphere in Cartesian form (`d + 1` coordinates),
//! angle blocks in spherical coordinates (`d` angles) and flat blocks in
//! unconstrained Euclidean space.

use std::f64::consts::PI;

use super::constraint::ConstraintSpec;
use super::functional::{one_sided_factor, one_sided_unfold, side_at, LinearMap, QuadraticMap, Side};
use super::norms::{
    ball_to_cube_pullback, ball_to_qnorm, ball_to_qnorm_jacobian, ball_to_rectangle, qnorm_to_ball,
    rectangle_to_ball,
};
use super::sphere::{ball_to_sphere, round_log_weight};
use crate::error::{Error, Result};
use crate::linalg::{matrix_from_rows, norm2_sq};

/// Which coordinate system the sphere blocks use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinates {
    Cartesian,
    Spherical,
}

impl Coordinates {
    fn kernel(self) -> &'static str {
        match self {
            Self::Cartesian => "c-SphHMC",
            Self::Spherical => "s-SphHMC",
        }
    }
}

#[derive(Debug, Clone)]
pub enum BallMap {
    Unit,
    QNorm { q: f64, radius: f64 },
    Rect { lower: Vec<f64>, upper: Vec<f64> },
    Linear { map: LinearMap, lower: Vec<f64>, upper: Vec<f64> },
    Ring(QuadraticMap),
}

impl BallMap {
    /// Ball coordinates to the domain, with `log|d beta / d theta|`.
    pub fn to_domain(&self, theta: &[f64]) -> (Vec<f64>, f64) {
        match self {
            Self::Unit => (theta.to_vec(), 0.0),
            Self::QNorm { q, radius } => {
                let (mut beta, w) = ball_to_qnorm(theta, *q);
                beta.iter_mut().for_each(|b| *b *= radius);
                (beta, w + theta.len() as f64 * radius.ln())
            }
            Self::Rect { lower, upper } => ball_to_rectangle(theta, lower, upper),
            Self::Linear { map, lower, upper } => {
                let (eta, w1) = ball_to_rectangle(theta, lower, upper);
                let (beta, w2) = map.box_to_linear(&eta);
                (beta, w1 + w2)
            }
            Self::Ring(m) => m.ball_to_domain(theta),
        }
    }

    pub fn from_domain(&self, beta: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Unit => {
                if norm2_sq(beta) > 1.0 + 1e-12 {
                    return Err(Error::DomainViolation("point outside the unit ball".into()));
                }
                Ok(beta.to_vec())
            }
            Self::QNorm { q, radius } => {
                let scaled: Vec<f64> = beta.iter().map(|b| b / radius).collect();
                qnorm_to_ball(&scaled, *q)
            }
            Self::Rect { lower, upper } => rectangle_to_ball(beta, lower, upper),
            Self::Linear { map, lower, upper } => rectangle_to_ball(&map.linear_to_box(beta).0, lower, upper),
            Self::Ring(m) => m.domain_to_ball(beta),
        }
    }

    /// `(d beta / d theta)^T g`.
    pub fn pullback(&self, theta: &[f64], g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; g.len()];
        match self {
            Self::Unit => out.copy_from_slice(g),
            Self::QNorm { q, radius } => {
                let jac = ball_to_qnorm_jacobian(theta, *q);
                for ((o, j), gi) in out.iter_mut().zip(jac).zip(g) {
                    *o = radius * j * gi;
                }
            }
            Self::Rect { lower, upper } => {
                let scaled = half_widths(lower, upper, g);
                ball_to_cube_pullback(theta, &scaled, &mut out);
            }
            Self::Linear { map, lower, upper } => {
                let scaled = half_widths(lower, upper, &map.pullback(g));
                ball_to_cube_pullback(theta, &scaled, &mut out);
            }
            Self::Ring(m) => out = m.pullback(theta, g),
        }
        out
    }

    fn default_theta(&self, d: usize) -> Vec<f64> {
        let mut t = vec![0.0; d];
        if matches!(self, Self::Ring(_)) {
            t[0] = 0.5;
        }
        t
    }
}

fn half_widths(lower: &[f64], upper: &[f64], g: &[f64]) -> Vec<f64> {
    g.iter()
        .zip(lower.iter().zip(upper))
        .map(|(gi, (l, u))| gi * (u - l) / 2.0)
        .collect()
}

/// Hyper-rectangle in spherical coordinates: `beta_d = l_d + (u_d - l_d) theta_d / pi`.
/// The last angle ranges over `[0, 2 pi)` and is folded onto `[0, pi]`,
/// which identifies the two hemispheres.
#[derive(Debug, Clone)]
pub enum AngleMap {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Linear { map: LinearMap, lower: Vec<f64>, upper: Vec<f64> },
}

fn fold_last(theta: f64) -> (f64, f64) {
    if theta > PI {
        (2.0 * PI - theta, -1.0)
    } else {
        (theta, 1.0)
    }
}

impl AngleMap {
    fn bounds(&self) -> (&[f64], &[f64]) {
        match self {
            Self::Box { lower, upper } | Self::Linear { lower, upper, .. } => (lower, upper),
        }
    }

    fn angles_to_box(&self, theta: &[f64]) -> Vec<f64> {
        let (lower, upper) = self.bounds();
        let d = theta.len();
        (0..d)
            .map(|i| {
                let t = if i + 1 == d { fold_last(theta[i]).0 } else { theta[i] };
                (lower[i] + (upper[i] - lower[i]) * t / PI).clamp(lower[i], upper[i])
            })
            .collect()
    }

    /// Angles to the domain; the weight is the round-metric volume term plus
    /// the constant affine scaling.
    pub fn to_domain(&self, theta: &[f64]) -> (Vec<f64>, f64, bool) {
        let (lower, upper) = self.bounds();
        let eta = self.angles_to_box(theta);
        let (w_round, pole) = round_log_weight(theta);
        let scale: f64 = lower.iter().zip(upper).map(|(l, u)| ((u - l) / PI).ln()).sum();
        match self {
            Self::Box { .. } => (eta, w_round + scale, pole),
            Self::Linear { map, .. } => {
                let (beta, w) = map.box_to_linear(&eta);
                (beta, w_round + scale + w, pole)
            }
        }
    }

    /// Domain point of [`AngleMap::to_domain`] without the weight.
    pub fn to_point(&self, theta: &[f64]) -> Vec<f64> {
        let eta = self.angles_to_box(theta);
        match self {
            Self::Box { .. } => eta,
            Self::Linear { map, .. } => map.box_to_linear(&eta).0,
        }
    }

    pub fn from_domain(&self, beta: &[f64]) -> Result<Vec<f64>> {
        let (lower, upper) = self.bounds();
        let eta = match self {
            Self::Box { .. } => beta.to_vec(),
            Self::Linear { map, .. } => map.linear_to_box(beta).0,
        };
        eta.iter()
            .zip(lower.iter().zip(upper))
            .map(|(e, (l, u))| {
                let t = PI * (e - l) / (u - l);
                if !(-1e-12..=PI + 1e-12).contains(&t) {
                    return Err(Error::DomainViolation("point outside the hyper-rectangle".into()));
                }
                Ok(t.clamp(0.0, PI))
            })
            .collect()
    }

    pub fn pullback(&self, theta: &[f64], g: &[f64]) -> Vec<f64> {
        let (lower, upper) = self.bounds();
        let g = match self {
            Self::Box { .. } => g.to_vec(),
            Self::Linear { map, .. } => map.pullback(g),
        };
        let d = theta.len();
        (0..d)
            .map(|i| {
                let s = if i + 1 == d { fold_last(theta[i]).1 } else { 1.0 };
                s * g[i] * (upper[i] - lower[i]) / PI
            })
            .collect()
    }
}

/// Unconstrained Euclidean coordinates for one-sided constraints.
#[derive(Debug, Clone)]
pub struct FlatMap {
    pub bound: Vec<f64>,
    pub sides: Vec<Side>,
}

impl FlatMap {
    pub fn to_domain(&self, theta: &[f64]) -> Vec<f64> {
        one_sided_unfold(theta, &self.bound, &self.sides)
    }

    pub fn from_domain(&self, beta: &[f64]) -> Result<Vec<f64>> {
        beta.iter()
            .zip(&self.bound)
            .enumerate()
            .map(|(i, (b, l))| {
                let t = match side_at(&self.sides, i) {
                    Side::Lower => b - l,
                    Side::Upper => l - b,
                };
                if t < -1e-12 {
                    return Err(Error::DomainViolation("point violates a one-sided bound".into()));
                }
                Ok(t.max(0.0))
            })
            .collect()
    }

    pub fn pullback(&self, theta: &[f64], g: &[f64]) -> Vec<f64> {
        one_sided_factor(theta, &self.sides).iter().zip(g).map(|(f, gi)| f * gi).collect()
    }
}

#[derive(Debug, Clone)]
pub enum Patch {
    Ball(BallMap),
    Angles(AngleMap),
    Flat(FlatMap),
}

#[derive(Debug, Clone)]
pub struct ChartBlock {
    pub indices: Vec<usize>,
    pub patch: Patch,
}

impl ChartBlock {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}

/// Domain point produced by [`Chart::map`].
#[derive(Debug, Clone)]
pub struct Mapped {
    pub beta: Vec<f64>,
    /// Total `log|d beta / d theta_S|`, summed over blocks.
    pub log_weight: f64,
    /// Some angle block is within `1e-12` of a coordinate pole.
    pub pole: bool,
}

#[derive(Debug, Clone)]
pub struct Chart {
    dim: usize,
    blocks: Vec<ChartBlock>,
}

impl Chart {
    pub fn new(spec: &ConstraintSpec, coords: Coordinates) -> Result<Self> {
        spec.validate()?;
        let dim = spec.dim();
        let mut blocks = Vec::new();
        match spec {
            ConstraintSpec::Blocked { blocks: bs } => {
                for b in bs {
                    blocks.push(ChartBlock { indices: b.indices.clone(), patch: patch_for(&b.spec, coords)? });
                }
            }
            other => blocks.push(ChartBlock { indices: (0..dim).collect(), patch: patch_for(other, coords)? }),
        }
        Ok(Self { dim, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[ChartBlock] {
        &self.blocks
    }

    /// Evaluates the chart at per-block positions (sphere points for ball
    /// blocks, angles, or flat coordinates).
    pub fn map(&self, pos: &[Vec<f64>]) -> Mapped {
        let mut beta = vec![0.0; self.dim];
        let mut log_weight = 0.0;
        let mut pole = false;
        for (blk, p) in self.blocks.iter().zip(pos) {
            let (local, w) = match &blk.patch {
                Patch::Ball(m) => {
                    let d = blk.dim();
                    let (b, w) = m.to_domain(&p[..d]);
                    (b, w + p[d].abs().ln())
                }
                Patch::Angles(m) => {
                    let (b, w, pl) = m.to_domain(p);
                    pole |= pl;
                    (b, w)
                }
                Patch::Flat(m) => (m.to_domain(p), 0.0),
            };
            for (&i, v) in blk.indices.iter().zip(local) {
                beta[i] = v;
            }
            log_weight += w;
        }
        Mapped { beta, log_weight, pole }
    }

    /// Gradient with respect to each block's free coordinates (ball
    /// coordinates for sphere blocks, i.e. without the auxiliary component).
    /// `beta` alone, skipping the log-weight terms of [`Chart::map`].
    pub fn point(&self, pos: &[Vec<f64>]) -> Vec<f64> {
        let mut beta = vec![0.0; self.dim];
        for (blk, p) in self.blocks.iter().zip(pos) {
            let local = match &blk.patch {
                Patch::Ball(m) => m.to_domain(&p[..blk.dim()]).0,
                Patch::Angles(m) => m.to_point(p),
                Patch::Flat(m) => m.to_domain(p),
            };
            for (&i, v) in blk.indices.iter().zip(local) {
                beta[i] = v;
            }
        }
        beta
    }

    pub fn pullback(&self, pos: &[Vec<f64>], grad_beta: &[f64]) -> Vec<Vec<f64>> {
        self.blocks
            .iter()
            .zip(pos)
            .map(|(blk, p)| {
                let g: Vec<f64> = blk.indices.iter().map(|&i| grad_beta[i]).collect();
                match &blk.patch {
                    Patch::Ball(m) => m.pullback(&p[..blk.dim()], &g),
                    Patch::Angles(m) => m.pullback(p, &g),
                    Patch::Flat(m) => m.pullback(p, &g),
                }
            })
            .collect()
    }

    /// Positions for a starting point `beta0`, or the centre of each block.
    pub fn initial_position(&self, beta0: Option<&[f64]>) -> Result<Vec<Vec<f64>>> {
        if let Some(b) = beta0 {
            crate::error::check_dim(self.dim, b.len())?;
        }
        self.blocks
            .iter()
            .map(|blk| {
                let local: Option<Vec<f64>> = beta0.map(|b| blk.indices.iter().map(|&i| b[i]).collect());
                let d = blk.dim();
                match &blk.patch {
                    Patch::Ball(m) => {
                        let theta = match &local {
                            Some(b) => m.from_domain(b)?,
                            None => m.default_theta(d),
                        };
                        ball_to_sphere(&theta)
                    }
                    Patch::Angles(m) => match &local {
                        Some(b) => m.from_domain(b),
                        None => Ok(vec![PI / 2.0; d]),
                    },
                    Patch::Flat(m) => match &local {
                        Some(b) => m.from_domain(b),
                        None => Ok(vec![1.0; d]),
                    },
                }
            })
            .collect()
    }
}

fn patch_for(spec: &ConstraintSpec, coords: Coordinates) -> Result<Patch> {
    let unsupported = || Error::Unsupported { kernel: coords.kernel(), what: format!("{spec:?}") };
    Ok(match (spec, coords) {
        (ConstraintSpec::OneSided { bound, sides }, _) => {
            Patch::Flat(FlatMap { bound: bound.clone(), sides: sides.clone() })
        }
        (ConstraintSpec::Box { lower, upper }, Coordinates::Cartesian) => {
            Patch::Ball(BallMap::Rect { lower: lower.clone(), upper: upper.clone() })
        }
        (ConstraintSpec::Box { lower, upper }, Coordinates::Spherical) => {
            Patch::Angles(AngleMap::Box { lower: lower.clone(), upper: upper.clone() })
        }
        (ConstraintSpec::LinearBox { a, lower, upper }, _) => {
            let map = LinearMap::new(matrix_from_rows(a)?)?;
            let (lower, upper) = (lower.clone(), upper.clone());
            match coords {
                Coordinates::Cartesian => Patch::Ball(BallMap::Linear { map, lower, upper }),
                Coordinates::Spherical => Patch::Angles(AngleMap::Linear { map, lower, upper }),
            }
        }
        (ConstraintSpec::UnitBall { .. }, Coordinates::Cartesian) => Patch::Ball(BallMap::Unit),
        (ConstraintSpec::QNormBall { q, radius, .. }, Coordinates::Cartesian) => {
            Patch::Ball(BallMap::QNorm { q: *q, radius: *radius })
        }
        (ConstraintSpec::QuadraticRing { a, b, lower, upper }, Coordinates::Cartesian) => {
            Patch::Ball(BallMap::Ring(QuadraticMap::new(matrix_from_rows(a)?, b.clone(), *lower, *upper)?))
        }
        _ => return Err(unsupported()),
    })
}
