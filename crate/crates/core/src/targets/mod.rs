//! Potential energies `U(beta) = -log density` and their gradients.

mod dirichlet;
mod gaussian;
mod gp;
mod regression;

pub use dirichlet::DirichletMultinomial;
pub use gaussian::{box_gaussian_family, DampedSine, TruncatedGaussian};
pub use gp::{quantize, quantized_gp_posterior, synthetic_quantized_gp, QuantizedGp, QuantizedGpData};
pub use regression::{bridge_posterior, lasso_posterior, RegressionData, RegressionPosterior};

use crate::geometry::Chart;

/// A differentiable potential on the original domain. Implementations are
/// immutable after construction and shared across chains.
pub trait Target: Send + Sync {
    fn dim(&self) -> usize;

    fn potential(&self, beta: &[f64]) -> f64;

    /// Writes `grad U(beta)` into `out`.
    fn gradient(&self, beta: &[f64], out: &mut [f64]);

    fn id(&self) -> &str;
}

impl<T: Target + ?Sized> Target for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn potential(&self, beta: &[f64]) -> f64 {
        (**self).potential(beta)
    }
    fn gradient(&self, beta: &[f64], out: &mut [f64]) {
        (**self).gradient(beta, out)
    }
    fn id(&self) -> &str {
        (**self).id()
    }
}

impl<T: Target + ?Sized> Target for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn potential(&self, beta: &[f64]) -> f64 {
        (**self).potential(beta)
    }
    fn gradient(&self, beta: &[f64], out: &mut [f64]) {
        (**self).gradient(beta, out)
    }
    fn id(&self) -> &str {
        (**self).id()
    }
}

/// `U == 0`.
#[derive(Debug, Clone)]
pub struct Flat {
    pub dim: usize,
}

impl Target for Flat {
    fn dim(&self) -> usize {
        self.dim
    }
    fn potential(&self, _: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn id(&self) -> &str {
        "flat"
    }
}

/// Gradient of `U(T(theta))` with respect to each block's free coordinates,
/// `(d beta / d theta)^T grad_beta U`.
pub fn pullback_gradient<T: Target + ?Sized>(target: &T, chart: &Chart, pos: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let beta = chart.map(pos).beta;
    let mut g = vec![0.0; beta.len()];
    target.gradient(&beta, &mut g);
    chart.pullback(pos, &g)
}
