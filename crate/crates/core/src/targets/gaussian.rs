use nalgebra::DMatrix;

use super::Target;
use crate::error::Result;
use crate::linalg::{dot, matvec, spd_inverse};

/// `U = (beta - mu)^T Sigma^{-1} (beta - mu) / 2`; the truncation lives in
/// the accompanying constraint.
#[derive(Debug, Clone)]
pub struct TruncatedGaussian {
    mu: Vec<f64>,
    precision: DMatrix<f64>,
    id: String,
}

impl TruncatedGaussian {
    pub fn new(mu: Vec<f64>, sigma: &DMatrix<f64>) -> Result<Self> {
        crate::error::check_dim(sigma.nrows(), mu.len())?;
        let (precision, _) = spd_inverse(sigma, None)?;
        Ok(Self { mu, precision, id: "truncated_gaussian".into() })
    }

    /// Builds the target directly from a precision matrix.
    pub fn from_precision(mu: Vec<f64>, precision: DMatrix<f64>) -> Self {
        Self { mu, precision, id: "truncated_gaussian".into() }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    fn centred(&self, beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let r: Vec<f64> = beta.iter().zip(&self.mu).map(|(b, m)| b - m).collect();
        let mut pr = vec![0.0; r.len()];
        matvec(&self.precision, &r, &mut pr);
        (r, pr)
    }
}

impl Target for TruncatedGaussian {
    fn dim(&self) -> usize {
        self.mu.len()
    }

    fn potential(&self, beta: &[f64]) -> f64 {
        let (r, pr) = self.centred(beta);
        0.5 * dot(&r, &pr)
    }

    fn gradient(&self, beta: &[f64], out: &mut [f64]) {
        let (_, pr) = self.centred(beta);
        out.copy_from_slice(&pr);
    }

    fn id(&self) -> &str {
        &self.id
    }
}

/// Covariance `Sigma_ij = 1 / (1 + |i - j|)` used for the D-dimensional box experiments.
pub fn box_gaussian_family(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| 1.0 / (1.0 + i.abs_diff(j) as f64))
}

/// Damped sine wave density `sin^2(Q) / Q` with `Q = (beta - mu)^T Sigma^{-1} (beta - mu) / 2`.
#[derive(Debug, Clone)]
pub struct DampedSine {
    inner: TruncatedGaussian,
}

const SERIES_Q: f64 = 1e-4;

impl DampedSine {
    pub fn new(mu: Vec<f64>, sigma: &DMatrix<f64>) -> Result<Self> {
        Ok(Self { inner: TruncatedGaussian::new(mu, sigma)?.with_id("damped_sine") })
    }

    /// `dU/dQ = 1/Q - 2 cot Q`.
    fn du_dq(q: f64) -> f64 {
        if q < SERIES_Q {
            -1.0 / q + 2.0 * q / 3.0 + 2.0 * q.powi(3) / 45.0
        } else {
            1.0 / q - 2.0 / q.tan()
        }
    }
}

impl Target for DampedSine {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// `+inf` at zeros of the density (`Q = 0` or `Q = k pi`).
    fn potential(&self, beta: &[f64]) -> f64 {
        let q = self.inner.potential(beta);
        if q == 0.0 {
            return f64::INFINITY;
        }
        // sin Q at a multiple of pi is pure rounding noise of size ~ eps * Q
        if q >= SERIES_Q && q.sin().abs() <= 4.0 * f64::EPSILON * q {
            return f64::INFINITY;
        }
        let ratio = if q < SERIES_Q { q * (1.0 - q * q / 3.0) } else { q.sin().powi(2) / q };
        if ratio <= 0.0 {
            f64::INFINITY
        } else {
            -ratio.ln()
        }
    }

    fn gradient(&self, beta: &[f64], out: &mut [f64]) {
        let (r, pr) = self.inner.centred(beta);
        let q = 0.5 * dot(&r, &pr);
        let f = Self::du_dq(q);
        for (o, p) in out.iter_mut().zip(pr) {
            *o = f * p;
        }
    }

    fn id(&self) -> &str {
        self.inner.id()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_gaussian_at_origin() {
        let t = TruncatedGaussian::new(vec![0.0; 3], &DMatrix::identity(3, 3)).unwrap();
        assert_eq!(t.potential(&[0.0; 3]), 0.0);
        let mut g = [1.0; 3];
        t.gradient(&[0.0; 3], &mut g);
        assert_eq!(g, [0.0; 3]);
    }

    #[test]
    fn not_spd_is_rejected() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(TruncatedGaussian::new(vec![0.0; 2], &s).is_err());
    }

    #[test]
    fn damped_sine_zero_and_series() {
        let t = DampedSine::new(vec![0.0], &DMatrix::identity(1, 1)).unwrap();
        // Q = pi at beta = sqrt(2 pi)
        let b = (2.0 * std::f64::consts::PI).sqrt();
        assert_eq!(t.potential(&[b]), f64::INFINITY);
        let small = 1e-3;
        let q: f64 = 0.5 * small * small;
        assert!((t.potential(&[small]) + q.ln()).abs() < 1e-6);
        assert_eq!(t.potential(&[0.0]), f64::INFINITY);
    }

    #[test]
    fn family_covariance() {
        let s = box_gaussian_family(3);
        assert_eq!(s[(0, 2)], 1.0 / 3.0);
        assert_eq!(s[(1, 1)], 1.0);
    }
}
