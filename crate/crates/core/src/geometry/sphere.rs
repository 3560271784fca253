//! Lifts between the unit ball / hyper-rectangle charts and the unit sphere
//! `S^D` embedded in `R^{D+1}`, plus the matching velocity push-forward and
//! pull-back for the angular chart.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{norm2_sq, sign};

const DOMAIN_TOL: f64 = 1e-12;
pub(crate) const POLE_FLAG: f64 = 1e-12;

/// `theta -> (theta, +sqrt(1 - |theta|^2))`.
pub fn ball_to_sphere(theta: &[f64]) -> Result<Vec<f64>> {
    let r2 = norm2_sq(theta);
    if r2.sqrt() > 1.0 + DOMAIN_TOL {
        return Err(Error::DomainViolation(format!(
            "|theta|_2 = {} exceeds 1",
            r2.sqrt()
        )));
    }
    let mut out = Vec::with_capacity(theta.len() + 1);
    out.extend_from_slice(theta);
    out.push((1.0 - r2).max(0.0).sqrt());
    Ok(out)
}

/// Drops the auxiliary coordinate. The log volume adjustment is
/// `log |theta_{D+1}|`; both hemispheres map to the same ball point.
pub fn sphere_to_ball(theta_tilde: &[f64]) -> (Vec<f64>, f64) {
    let d = theta_tilde.len() - 1;
    (theta_tilde[..d].to_vec(), theta_tilde[d].abs().ln())
}

/// Spherical coordinates `theta in [0,pi]^{D-1} x [0,2pi)` to the embedded point.
pub fn rect_to_sphere(theta: &[f64]) -> Result<Vec<f64>> {
    let d = theta.len();
    for (i, &t) in theta.iter().enumerate() {
        let hi = if i + 1 == d { 2.0 * PI } else { PI };
        let inside = if i + 1 == d {
            t >= -DOMAIN_TOL && t < hi
        } else {
            t >= -DOMAIN_TOL && t <= hi + DOMAIN_TOL
        };
        if !inside || !t.is_finite() {
            return Err(Error::DomainViolation(format!(
                "angle {i} = {t} outside its chart range"
            )));
        }
    }
    Ok(rect_to_sphere_unchecked(theta))
}

pub(crate) fn rect_to_sphere_unchecked(theta: &[f64]) -> Vec<f64> {
    let d = theta.len();
    let mut x = Vec::with_capacity(d + 1);
    let mut prod = 1.0;
    for &t in theta {
        x.push(t.cos() * prod);
        prod *= t.sin();
    }
    x.push(prod);
    x
}

/// Result of pulling a sphere point back to spherical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RectCoords {
    pub theta: Vec<f64>,
    /// `-sum_{d<D} (D-d) log sin(theta_d)`.
    pub log_weight: f64,
    /// Set when some `sin(theta_d)` (d < D) falls below `1e-12`.
    pub pole: bool,
}

/// `arccot` on the `(0, pi)` branch.
#[inline]
pub fn arccot(y: f64) -> f64 {
    (1.0f64).atan2(y)
}

/// Inverse of [`rect_to_sphere`]. Partial radii are taken from the tail sums
/// `sum_{i>d} x_i^2` rather than `1 - sum_{i<=d} x_i^2`.
pub fn sphere_to_rect(x: &[f64]) -> RectCoords {
    let theta = sphere_to_angles(x);
    let (log_weight, pole) = round_log_weight(&theta);
    RectCoords {
        theta,
        log_weight,
        pole,
    }
}

/// Angles of [`sphere_to_rect`] without the weight.
pub(crate) fn sphere_to_angles(x: &[f64]) -> Vec<f64> {
    let d = x.len() - 1;
    let mut theta = vec![0.0; d];
    // tail = sum_{j > i} x_j^2, accumulated from the back
    let mut tails = vec![0.0; d + 1];
    let mut acc = 0.0;
    for i in (0..d).rev() {
        acc += x[i + 1] * x[i + 1];
        tails[i] = acc;
    }
    for i in 0..d.saturating_sub(1) {
        let rest = tails[i].sqrt();
        theta[i] = if rest == 0.0 {
            if x[i] >= 0.0 {
                0.0
            } else {
                PI
            }
        } else {
            arccot(x[i] / rest)
        };
    }
    if d >= 1 {
        let (xd, xl) = (x[d - 1], x[d]);
        let s = sign(xl);
        theta[d - 1] = arccot(xd / xl) + 0.5 * PI * s * (s - 1.0);
        if theta[d - 1] >= 2.0 * PI {
            theta[d - 1] -= 2.0 * PI;
        }
    }
    theta
}

/// `-sum_{d=1}^{D-1} (D-d) log sin(theta_d)` and the pole flag.
pub(crate) fn round_log_weight(theta: &[f64]) -> (f64, bool) {
    let d = theta.len();
    let mut w = 0.0;
    let mut pole = false;
    for (i, &t) in theta.iter().enumerate().take(d.saturating_sub(1)) {
        let s = t.sin();
        if s < POLE_FLAG {
            pole = true;
        }
        w -= (d - 1 - i) as f64 * s.abs().ln();
    }
    (w, pole)
}

/// Pushes an angular velocity forward to the ambient tangent vector
/// `xdot = dT(theta) v`. The products are accumulated recursively so no
/// `tan`/`cot` factor is ever formed.
pub fn push_velocity(theta: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = theta.len();
    let mut x = Vec::with_capacity(d + 1);
    let mut xdot = Vec::with_capacity(d + 1);
    let (mut p, mut pdot) = (1.0, 0.0);
    for i in 0..d {
        let (s, c) = theta[i].sin_cos();
        x.push(c * p);
        xdot.push(-s * v[i] * p + c * pdot);
        let np = s * p;
        pdot = c * v[i] * p + s * pdot;
        p = np;
    }
    x.push(p);
    xdot.push(pdot);
    (x, xdot)
}

/// Pulls an ambient tangent vector back to angular velocities.
///
/// For `d < D`: `v_d = -(xdot_d R_{d-1} + x_d S_{d-1}) / (R_{d-1} sqrt(R_d))`
/// with `R_d = sum_{i>d} x_i^2` and `S_d = sum_{i<=d} x_i xdot_i`; the last
/// angle uses the planar formula on `(x_D, x_{D+1})`.
pub fn pull_velocity(x: &[f64], xdot: &[f64]) -> Vec<f64> {
    let d = x.len() - 1;
    let mut tails = vec![0.0; d + 2];
    for i in (0..=d).rev() {
        tails[i] = tails[i + 1] + x[i] * x[i];
    }
    let mut v = vec![0.0; d];
    let mut s_prev = 0.0;
    for i in 0..d.saturating_sub(1) {
        let r_prev = tails[i];
        let r_cur = tails[i + 1];
        v[i] = -(xdot[i] * r_prev + x[i] * s_prev) / (r_prev * r_cur.sqrt());
        s_prev += x[i] * xdot[i];
    }
    if d >= 1 {
        let (a, b) = (x[d - 1], x[d]);
        v[d - 1] = (a * xdot[d] - xdot[d - 1] * b) / (a * a + b * b);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;

    #[test]
    fn pole_and_equator() {
        let p = ball_to_sphere(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, vec![0.0, 0.0, 0.0, 1.0]);
        let e = ball_to_sphere(&[0.6, 0.8]).unwrap();
        assert!(e[2].abs() < 1e-7);
        let q = ball_to_sphere(&[0.3, 0.4]).unwrap();
        assert!((q[2] - 0.75f64.sqrt()).abs() < 1e-15);
        assert!(ball_to_sphere(&[0.9, 0.9]).is_err());
    }

    #[test]
    fn drop_last_coordinate() {
        let (t, w) = sphere_to_ball(&[0.0, 0.0, 1.0]);
        assert_eq!(t, vec![0.0, 0.0]);
        assert_eq!(w, 0.0);
        let (_, w) = sphere_to_ball(&[0.0, 0.0, -1.0]);
        assert_eq!(w, 0.0);
        let (t, w) = sphere_to_ball(&[0.3, 0.4, 0.866025]);
        assert_eq!(t, vec![0.3, 0.4]);
        assert!((w - 0.866025f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn angles_to_sphere_examples() {
        let x = rect_to_sphere(&[0.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && x[1].abs() < 1e-15);
        let x = rect_to_sphere(&[PI / 2.0]).unwrap();
        assert!(x[0].abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let x = rect_to_sphere(&[PI / 2.0, PI / 2.0]).unwrap();
        assert!(x[0].abs() < 1e-15 && x[1].abs() < 1e-15 && (x[2] - 1.0).abs() < 1e-15);
        assert!(rect_to_sphere(&[4.0, 1.0]).is_err());
        assert!(rect_to_sphere(&[1.0, 2.0 * PI]).is_err());
    }

    #[test]
    fn sphere_to_angles_examples() {
        let r = sphere_to_rect(&[0.0, 1.0]);
        assert!((r.theta[0] - PI / 2.0).abs() < 1e-15);
        assert_eq!(r.log_weight, 0.0);
        let r = sphere_to_rect(&[0.0, 0.0, 1.0]);
        assert!((r.theta[0] - PI / 2.0).abs() < 1e-15);
        assert!((r.theta[1] - PI / 2.0).abs() < 1e-15);
        assert!(r.log_weight.abs() < 1e-15);
        let x = rect_to_sphere(&[1.0, 2.0]).unwrap();
        let r = sphere_to_rect(&x);
        assert!((r.theta[0] - 1.0).abs() < 1e-14 && (r.theta[1] - 2.0).abs() < 1e-14);
        // lower half of the last circle
        let x = rect_to_sphere(&[0.7, 4.0]).unwrap();
        let r = sphere_to_rect(&x);
        assert!((r.theta[1] - 4.0).abs() < 1e-14);
        assert!(!r.pole);
        assert!(sphere_to_rect(&[1.0, 0.0, 0.0]).pole);
    }

    #[test]
    fn velocity_push_is_tangent_and_pull_inverts() {
        let theta = [0.4, 2.1, 1.3, 5.0];
        let v = [0.3, -1.2, 0.7, 0.25];
        let (x, xdot) = push_velocity(&theta, &v);
        assert!((norm2(&x) - 1.0).abs() < 1e-14);
        assert!(crate::linalg::dot(&x, &xdot).abs() < 1e-14);
        let back = pull_velocity(&x, &xdot);
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}
