//! Linear and quadratic reductions of functional constraints to boxes and
//! rings, the ring/ball bijection and the one-sided unfold.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{dot, matvec, norm2, sign};

/// Invertible change of variables `eta = A beta`.
#[derive(Debug, Clone)]
pub struct LinearMap {
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    log_abs_det: f64,
}

impl LinearMap {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidConstraint("linear constraint matrix must be square".into()));
        }
        let det = a.clone().lu().determinant();
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(Error::SingularMatrix(det.abs()));
        }
        let a_inv = a.clone().try_inverse().ok_or(Error::SingularMatrix(det.abs()))?;
        Ok(Self { a, a_inv, log_abs_det: det.abs().ln() })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn log_abs_det(&self) -> f64 {
        self.log_abs_det
    }

    /// `eta = A beta` together with `log|d eta / d beta| = log|det A|`.
    pub fn linear_to_box(&self, beta: &[f64]) -> (Vec<f64>, f64) {
        let mut eta = vec![0.0; beta.len()];
        matvec(&self.a, beta, &mut eta);
        (eta, self.log_abs_det)
    }

    /// `beta = A^{-1} eta` with `w = -log|det A|`.
    pub fn box_to_linear(&self, eta: &[f64]) -> (Vec<f64>, f64) {
        let mut beta = vec![0.0; eta.len()];
        matvec(&self.a_inv, eta, &mut beta);
        (beta, -self.log_abs_det)
    }

    /// `A^{-T} g`, the gradient with respect to `eta` given one with respect to `beta`.
    pub fn pullback(&self, g: &[f64]) -> Vec<f64> {
        let n = g.len();
        (0..n)
            .map(|j| (0..n).map(|i| self.a_inv[(i, j)] * g[i]).sum())
            .collect()
    }
}

/// Reduction of `l <= beta^T A beta + b^T beta <= u` to the ring
/// `l* <= |beta*|^2 <= u*` through `beta* = Lambda^{1/2} Q^T (beta + A^{-1} b / 2)`.
#[derive(Debug, Clone)]
pub struct QuadraticMap {
    a: DMatrix<f64>,
    b: Vec<f64>,
    /// Eigenvectors of `A` as columns.
    q: DMatrix<f64>,
    sqrt_lambda: Vec<f64>,
    shift: Vec<f64>,
    half_log_det: f64,
    sqrt_l: f64,
    sqrt_u: f64,
}

impl QuadraticMap {
    pub fn new(a: DMatrix<f64>, b: Vec<f64>, lower: f64, upper: f64) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || b.len() != n {
            return Err(Error::InvalidConstraint("quadratic constraint shapes disagree".into()));
        }
        if (&a - a.transpose()).amax() > 1e-12 * a.amax().max(1.0) {
            return Err(Error::NotSpd);
        }
        let eig = SymmetricEigen::new(a.clone());
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::NotSpd);
        }
        let sqrt_lambda: Vec<f64> = eig.eigenvalues.iter().map(|l| l.sqrt()).collect();
        // A^{-1} b = Q Lambda^{-1} Q^T b
        let qtb: Vec<f64> = (0..n).map(|k| (0..n).map(|i| eig.eigenvectors[(i, k)] * b[i]).sum()).collect();
        let shift: Vec<f64> = (0..n)
            .map(|i| 0.5 * (0..n).map(|k| eig.eigenvectors[(i, k)] * qtb[k] / eig.eigenvalues[k]).sum::<f64>())
            .collect();
        // b^T A^{-1} b / 4 = b^T shift / 2
        let offset = 0.5 * dot(&b, &shift);
        let (ls, us) = (lower + offset, upper + offset);
        if !(ls > 0.0 && us > ls) {
            return Err(Error::InvalidConstraint(format!(
                "reduced ring bounds must satisfy 0 < l* < u*, got l* = {ls}, u* = {us}"
            )));
        }
        let half_log_det = 0.5 * eig.eigenvalues.iter().map(|l| l.ln()).sum::<f64>();
        Ok(Self {
            a,
            b,
            q: eig.eigenvectors,
            sqrt_lambda,
            shift,
            half_log_det,
            sqrt_l: ls.sqrt(),
            sqrt_u: us.sqrt(),
        })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Reduced squared radii `(l*, u*)`.
    pub fn ring_bounds(&self) -> (f64, f64) {
        (self.sqrt_l * self.sqrt_l, self.sqrt_u * self.sqrt_u)
    }

    /// `beta^T A beta + b^T beta`.
    pub fn quadratic_form(&self, beta: &[f64]) -> f64 {
        let mut ab = vec![0.0; beta.len()];
        matvec(&self.a, beta, &mut ab);
        dot(beta, &ab) + dot(&self.b, beta)
    }

    pub fn to_ring(&self, beta: &[f64]) -> Vec<f64> {
        let n = beta.len();
        (0..n)
            .map(|k| self.sqrt_lambda[k] * (0..n).map(|i| self.q[(i, k)] * (beta[i] + self.shift[i])).sum::<f64>())
            .collect()
    }

    /// `beta = Q Lambda^{-1/2} beta* - A^{-1} b / 2` with `w = -log|A| / 2`.
    pub fn from_ring(&self, beta_star: &[f64]) -> (Vec<f64>, f64) {
        let n = beta_star.len();
        let scaled: Vec<f64> = beta_star.iter().zip(&self.sqrt_lambda).map(|(b, s)| b / s).collect();
        let beta = (0..n)
            .map(|i| (0..n).map(|k| self.q[(i, k)] * scaled[k]).sum::<f64>() - self.shift[i])
            .collect();
        (beta, -self.half_log_det)
    }

    /// Gradient with respect to `beta*` from one with respect to `beta`.
    pub fn pullback_from_ring(&self, g: &[f64]) -> Vec<f64> {
        let n = g.len();
        (0..n)
            .map(|k| (0..n).map(|i| self.q[(i, k)] * g[i]).sum::<f64>() / self.sqrt_lambda[k])
            .collect()
    }

    /// Full ball-to-domain map `theta -> beta` and its log-Jacobian.
    pub fn ball_to_domain(&self, theta: &[f64]) -> (Vec<f64>, f64) {
        let (bs, w_ring) = ball_to_ring(theta, self.sqrt_l, self.sqrt_u);
        let (beta, w_lin) = self.from_ring(&bs);
        (beta, w_ring + w_lin)
    }

    pub fn domain_to_ball(&self, beta: &[f64]) -> Result<Vec<f64>> {
        ring_to_ball(&self.to_ring(beta), self.sqrt_l, self.sqrt_u)
    }

    /// `(d beta / d theta)^T g` for [`Self::ball_to_domain`].
    pub fn pullback(&self, theta: &[f64], g: &[f64]) -> Vec<f64> {
        let gs = self.pullback_from_ring(g);
        ring_pullback(theta, &gs, self.sqrt_l, self.sqrt_u)
    }
}

/// `beta* -> theta = (beta*/|beta*|)(|beta*| - sqrt l*)/(sqrt u* - sqrt l*)`,
/// taking radii `sqrt_l = sqrt(l*)`, `sqrt_u = sqrt(u*)`.
pub fn ring_to_ball(beta_star: &[f64], sqrt_l: f64, sqrt_u: f64) -> Result<Vec<f64>> {
    let r = norm2(beta_star);
    if r < sqrt_l * (1.0 - 1e-12) || r > sqrt_u * (1.0 + 1e-12) {
        return Err(Error::DomainViolation(format!(
            "|beta*| = {r} outside the ring [{sqrt_l}, {sqrt_u}]"
        )));
    }
    let s = ((r - sqrt_l) / (sqrt_u - sqrt_l)).clamp(0.0, 1.0);
    Ok(beta_star.iter().map(|b| b / r * s).collect())
}

/// Inverse of [`ring_to_ball`] with the radial log-Jacobian
/// `(D - 1) log alpha + log(sqrt u* - sqrt l*)`,
/// `alpha = sqrt u* + (1/|theta| - 1) sqrt l*`.
///
/// The origin collapses onto the inner shell; it is sent to `sqrt(l*) e_1`
/// with an infinite weight.
pub fn ball_to_ring(theta: &[f64], sqrt_l: f64, sqrt_u: f64) -> (Vec<f64>, f64) {
    let d = theta.len();
    let r = norm2(theta);
    let width = sqrt_u - sqrt_l;
    if r == 0.0 {
        let mut b = vec![0.0; d];
        if d > 0 {
            b[0] = sqrt_l;
        }
        let w = if d > 1 { f64::INFINITY } else { width.ln() };
        return (b, w);
    }
    let alpha = sqrt_u + (1.0 / r - 1.0) * sqrt_l;
    let beta = theta.iter().map(|t| t * alpha).collect();
    (beta, (d as f64 - 1.0) * alpha.ln() + width.ln())
}

/// `(d beta* / d theta)^T g` for [`ball_to_ring`]; the Jacobian is symmetric.
pub fn ring_pullback(theta: &[f64], g: &[f64], sqrt_l: f64, sqrt_u: f64) -> Vec<f64> {
    let r = norm2(theta);
    if r == 0.0 {
        return vec![0.0; g.len()];
    }
    let alpha = sqrt_u + (1.0 / r - 1.0) * sqrt_l;
    // d alpha / dr = -sqrt_l / r^2, d r / d theta = theta / r
    let c = -sqrt_l / (r * r * r) * dot(theta, g);
    theta.iter().zip(g).map(|(t, gi)| alpha * gi + c * t).collect()
}

/// Which side of a one-sided constraint is finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `beta >= bound`
    #[default]
    Lower,
    /// `beta <= bound`
    Upper,
}

/// `beta_i = bound_i + |theta*_i|` (lower) or `bound_i - |theta*_i|` (upper).
pub fn one_sided_unfold(theta_star: &[f64], bound: &[f64], sides: &[Side]) -> Vec<f64> {
    theta_star
        .iter()
        .zip(bound)
        .enumerate()
        .map(|(i, (t, b))| match side_at(sides, i) {
            Side::Lower => b + t.abs(),
            Side::Upper => b - t.abs(),
        })
        .collect()
}

/// Chain-rule factor `d beta_i / d theta*_i`.
pub fn one_sided_factor(theta_star: &[f64], sides: &[Side]) -> Vec<f64> {
    theta_star
        .iter()
        .enumerate()
        .map(|(i, t)| match side_at(sides, i) {
            Side::Lower => sign(*t),
            Side::Upper => -sign(*t),
        })
        .collect()
}

pub(crate) fn side_at(sides: &[Side], i: usize) -> Side {
    sides.get(i).copied().unwrap_or_default()
}
