//! Maps between q-norm balls, the unit cube / hyper-rectangles and the unit
//! 2-ball, with log-Jacobians and Jacobian-transpose products.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, norm_inf, norm_q, sign};

const DOMAIN_TOL: f64 = 1e-12;

/// `beta_i -> sgn(beta_i) |beta_i|^{q/2}` for `|beta|_q <= 1`.
pub fn qnorm_to_ball(beta: &[f64], q: f64) -> Result<Vec<f64>> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidConstraint(format!("q = {q} must be in (0, inf)")));
    }
    let n = norm_q(beta, q);
    if n > 1.0 + DOMAIN_TOL {
        return Err(Error::DomainViolation(format!("|beta|_q = {n} exceeds 1")));
    }
    Ok(beta
        .iter()
        .map(|&b| sign(b) * b.abs().powf(q / 2.0))
        .collect())
}

/// Inverse of [`qnorm_to_ball`] with `log|dbeta/dtheta| =
/// D log(2/q) + (2/q - 1) sum log|theta_i|`. The weight is infinite when a
/// coordinate is exactly zero and `q != 2`.
pub fn ball_to_qnorm(theta: &[f64], q: f64) -> (Vec<f64>, f64) {
    let e = 2.0 / q;
    let beta = theta.iter().map(|&t| sign(t) * t.abs().powf(e)).collect();
    let w = if (q - 2.0).abs() < f64::EPSILON {
        0.0
    } else {
        theta.len() as f64 * e.ln() + (e - 1.0) * theta.iter().map(|t| t.abs().ln()).sum::<f64>()
    };
    (beta, w)
}

/// Diagonal Jacobian entries `(2/q) |theta_i|^{2/q - 1}` of [`ball_to_qnorm`].
pub fn ball_to_qnorm_jacobian(theta: &[f64], q: f64) -> Vec<f64> {
    let e = 2.0 / q;
    theta.iter().map(|t| e * t.abs().powf(e - 1.0)).collect()
}

/// `beta -> beta |beta|_inf / |beta|_2` for `beta` in `[-1, 1]^D`; the origin is fixed.
pub fn cube_to_ball(beta: &[f64]) -> Vec<f64> {
    let n2 = norm2(beta);
    if n2 == 0.0 {
        return vec![0.0; beta.len()];
    }
    let ratio = norm_inf(beta).0 / n2;
    beta.iter().map(|b| b * ratio).collect()
}

/// `theta -> theta |theta|_2 / |theta|_inf`, clipped to the cube.
pub fn ball_to_cube(theta: &[f64]) -> Vec<f64> {
    let (ninf, _) = norm_inf(theta);
    if ninf == 0.0 {
        return vec![0.0; theta.len()];
    }
    let ratio = norm2(theta) / ninf;
    theta.iter().map(|t| (t * ratio).clamp(-1.0, 1.0)).collect()
}

/// Ball to the hyper-rectangle `[l, u]` through the cube, with
/// `log|dbeta/dtheta| = D (log|theta|_2 - log|theta|_inf) + sum log((u_i - l_i)/2)`.
/// At the origin the radial ratio is taken as 1.
pub fn ball_to_rectangle(theta: &[f64], lower: &[f64], upper: &[f64]) -> (Vec<f64>, f64) {
    let cube = ball_to_cube(theta);
    let beta = cube
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(c, (l, u))| ((u - l) / 2.0 * c + (u + l) / 2.0).clamp(*l, *u))
        .collect();
    let scale: f64 = lower.iter().zip(upper).map(|(l, u)| ((u - l) / 2.0).ln()).sum();
    let (ninf, _) = norm_inf(theta);
    let radial = if ninf == 0.0 {
        0.0
    } else {
        theta.len() as f64 * (norm2(theta).ln() - ninf.ln())
    };
    (beta, radial + scale)
}

/// Inverse of [`ball_to_rectangle`].
pub fn rectangle_to_ball(beta: &[f64], lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
    let cube: Vec<f64> = beta
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(b, (l, u))| (2.0 * b - (u + l)) / (u - l))
        .collect();
    if norm_inf(&cube).0 > 1.0 + DOMAIN_TOL {
        return Err(Error::DomainViolation("point outside the hyper-rectangle".into()));
    }
    Ok(cube_to_ball(&cube))
}

/// `(d cube / d theta)^T g` for the ball-to-cube map:
/// `r [g + (theta/|theta|^2 - e_k/theta_k) (theta^T g)]`, `r = |theta|_2/|theta|_inf`.
pub fn ball_to_cube_pullback(theta: &[f64], g: &[f64], out: &mut [f64]) {
    let (ninf, k) = norm_inf(theta);
    if ninf == 0.0 {
        out.copy_from_slice(g);
        return;
    }
    let n2sq = dot(theta, theta);
    let r = n2sq.sqrt() / ninf;
    let tg = dot(theta, g);
    for (i, o) in out.iter_mut().enumerate() {
        *o = r * (g[i] + theta[i] / n2sq * tg);
    }
    out[k] -= r * tg / theta[k];
}
