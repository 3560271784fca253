use super::Target;
use crate::error::{Error, Result};

/// Dirichlet-multinomial posterior `Dir(n + alpha)` over the simplex.
///
/// As a [`Target`] it is the raw potential `-sum (n_k + alpha_k - 1) log pi_k`
/// on `pi`. [`Self::phi`] is the same density expressed on the positive
/// orthant of the sphere through `pi = theta^2`, volume term included.
#[derive(Debug, Clone)]
pub struct DirichletMultinomial {
    counts: Vec<f64>,
    alpha: Vec<f64>,
}

impl DirichletMultinomial {
    pub fn new(counts: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        crate::error::check_dim(counts.len(), alpha.len())?;
        if counts.len() < 2 {
            return Err(Error::InvalidConfig("need at least two categories".into()));
        }
        if counts.iter().any(|&n| !(n >= 0.0)) || alpha.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::InvalidConfig("counts must be >= 0 and alpha > 0".into()));
        }
        Ok(Self { counts, alpha })
    }

    pub fn total_count(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// `c_k = n_k + alpha_k - 1/2`.
    pub fn shifted_counts(&self) -> Vec<f64> {
        self.counts.iter().zip(&self.alpha).map(|(n, a)| n + a - 0.5).collect()
    }

    /// Conjugate posterior mean `(n_k + alpha_k) / sum (n + alpha)`.
    pub fn posterior_mean(&self) -> Vec<f64> {
        let tot: f64 = self.counts.iter().zip(&self.alpha).map(|(n, a)| n + a).sum();
        self.counts.iter().zip(&self.alpha).map(|(n, a)| (n + a) / tot).collect()
    }

    /// `phi(theta) = -sum (2 (n_k + alpha_k) - 1) log|theta_k|`.
    pub fn phi(&self, theta: &[f64]) -> f64 {
        self.shifted_counts()
            .iter()
            .zip(theta)
            .map(|(c, t)| -2.0 * c * t.abs().ln())
            .sum()
    }

    pub fn phi_gradient(&self, theta: &[f64], out: &mut [f64]) {
        for ((o, c), t) in out.iter_mut().zip(self.shifted_counts()).zip(theta) {
            *o = -2.0 * c / t;
        }
    }
}

impl Target for DirichletMultinomial {
    fn dim(&self) -> usize {
        self.counts.len()
    }

    fn potential(&self, pi: &[f64]) -> f64 {
        self.counts
            .iter()
            .zip(&self.alpha)
            .zip(pi)
            .map(|((n, a), p)| -(n + a - 1.0) * p.ln())
            .sum()
    }

    fn gradient(&self, pi: &[f64], out: &mut [f64]) {
        for (((o, n), a), p) in out.iter_mut().zip(&self.counts).zip(&self.alpha).zip(pi) {
            *o = -(n + a - 1.0) / p;
        }
    }

    fn id(&self) -> &str {
        "dirichlet_multinomial"
    }
}
