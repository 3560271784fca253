//! Closed-form metric algebra for the canonical (ball chart) and round
//! (spherical coordinate) metrics on the sphere.

use nalgebra::DMatrix;

use super::sphere::POLE_FLAG;
use crate::error::{Error, Result};
use crate::linalg::norm2_sq;

const EQUATOR_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct CanonicalMetric {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub log_det: f64,
}

/// `G = I + theta theta^T / (1 - |theta|^2)`, `G^{-1} = I - theta theta^T`,
/// `log det G = -2 log|theta_{D+1}|`.
pub fn canonical_metric_ops(theta: &[f64]) -> Result<CanonicalMetric> {
    let d = theta.len();
    let s = 1.0 - norm2_sq(theta);
    if s < EQUATOR_TOL {
        return Err(Error::EquatorSingularity(s));
    }
    let outer = DMatrix::from_fn(d, d, |i, j| theta[i] * theta[j]);
    let id = DMatrix::<f64>::identity(d, d);
    Ok(CanonicalMetric {
        g: &id + &outer / s,
        g_inv: id - outer,
        log_det: -s.ln(),
    })
}

/// Quadratic form `v^T G v` without forming `G`.
pub fn canonical_quadratic_form(theta: &[f64], v: &[f64]) -> f64 {
    let tv: f64 = theta.iter().zip(v).map(|(a, b)| a * b).sum();
    norm2_sq(v) + tv * tv / (1.0 - norm2_sq(theta))
}

#[derive(Debug, Clone)]
pub struct RoundMetric {
    /// Diagonal `[1, sin^2 theta_1, ..., prod_{d<D} sin^2 theta_d]`.
    pub diag: Vec<f64>,
    pub log_det: f64,
    /// Volume weight `-log det / 2`.
    pub log_weight: f64,
    pub pole: bool,
}

pub fn round_metric_ops(theta: &[f64]) -> RoundMetric {
    let d = theta.len();
    let mut diag = Vec::with_capacity(d);
    let mut prod = 1.0;
    let mut log_det = 0.0;
    let mut pole = false;
    for i in 0..d {
        diag.push(prod);
        if i + 1 < d {
            let s = theta[i].sin();
            pole |= s.abs() < POLE_FLAG;
            prod *= s * s;
            log_det += 2.0 * (d - 1 - i) as f64 * s.abs().ln();
        }
    }
    RoundMetric { diag, log_det, log_weight: -0.5 * log_det, pole }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sphere::sphere_to_rect;
    use crate::geometry::sphere::rect_to_sphere;

    #[test]
    fn canonical_examples() {
        let m = canonical_metric_ops(&[0.0, 0.0]).unwrap();
        assert_eq!(m.g, DMatrix::identity(2, 2));
        assert_eq!(m.log_det, 0.0);
        let m = canonical_metric_ops(&[0.3, 0.4]).unwrap();
        assert!((m.g.determinant() - 1.0 / 0.75).abs() < 1e-12);
        assert!((m.log_det - (1.0f64 / 0.75).ln()).abs() < 1e-12);
        let prod = &m.g * &m.g_inv;
        assert!((prod - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
        assert!(matches!(canonical_metric_ops(&[0.6, 0.8]), Err(Error::EquatorSingularity(_))));
    }

    #[test]
    fn round_examples() {
        let m = round_metric_ops(&[std::f64::consts::FRAC_PI_2, 1.0]);
        assert_eq!(m.diag, vec![1.0, 1.0]);
        assert_eq!(m.log_weight, 0.0);
        assert_eq!(round_metric_ops(&[2.0]).log_weight, 0.0);
        let th = [0.7, 1.9, 2.4, 4.0];
        let m = round_metric_ops(&th);
        let back = sphere_to_rect(&rect_to_sphere(&th).unwrap());
        assert!((m.log_weight - back.log_weight).abs() < 1e-12);
    }
}
