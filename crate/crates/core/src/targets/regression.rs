use nalgebra::{DMatrix, DVector};

use super::Target;
use crate::error::{Error, Result};
use crate::geometry::ConstraintSpec;
use crate::linalg::norm_q;

/// Design matrix and response for the penalised regression posteriors.
#[derive(Debug, Clone)]
pub struct RegressionData {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
}

impl RegressionData {
    pub fn new(x: DMatrix<f64>, y: Vec<f64>) -> Result<Self> {
        crate::error::check_dim(x.nrows(), y.len())?;
        Ok(Self { x, y })
    }

    /// Centres `y` and every column of `X`, and scales the columns to unit
    /// standard deviation, so no intercept needs to be sampled.
    pub fn standardized(&self) -> Self {
        let n = self.x.nrows() as f64;
        let ybar = self.y.iter().sum::<f64>() / n;
        let y = self.y.iter().map(|v| v - ybar).collect();
        let mut x = self.x.clone();
        for mut col in x.column_iter_mut() {
            let mean = col.sum() / n;
            col.add_scalar_mut(-mean);
            let sd = (col.norm_squared() / (n - 1.0)).sqrt();
            if sd > 0.0 {
                col /= sd;
            }
        }
        Self { x, y }
    }

    /// Ordinary least squares fit and the residual mean square `RSS / (N - D - 1)`.
    pub fn ols(&self) -> Result<(Vec<f64>, f64)> {
        let xtx = self.x.transpose() * &self.x;
        let xty = self.x.transpose() * DVector::from_column_slice(&self.y);
        let chol = xtx.cholesky().ok_or(Error::RankDeficient)?;
        let diag = chol.l_dirty().diagonal();
        if diag.min() <= 1e-6 * diag.max() {
            return Err(Error::RankDeficient);
        }
        let beta = chol.solve(&xty);
        let resid = DVector::from_column_slice(&self.y) - &self.x * &beta;
        let (n, d) = self.x.shape();
        if n <= d + 1 {
            return Err(Error::RankDeficient);
        }
        Ok((beta.iter().copied().collect(), resid.norm_squared() / (n - d - 1) as f64))
    }
}

/// `U(beta) = |y - X beta|^2 / (2 sigma^2)`.
#[derive(Debug, Clone)]
pub struct RegressionPosterior {
    xtx: DMatrix<f64>,
    xty: Vec<f64>,
    yty: f64,
    sigma2: f64,
    id: String,
}

impl RegressionPosterior {
    pub fn new(data: &RegressionData, sigma2: f64, id: impl Into<String>) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidConfig(format!("noise variance {sigma2} must be positive")));
        }
        let xtx = data.x.transpose() * &data.x;
        let xty = (data.x.transpose() * DVector::from_column_slice(&data.y)).iter().copied().collect();
        let yty = data.y.iter().map(|v| v * v).sum();
        Ok(Self { xtx, xty, yty, sigma2, id: id.into() })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

impl Target for RegressionPosterior {
    fn dim(&self) -> usize {
        self.xty.len()
    }

    fn potential(&self, beta: &[f64]) -> f64 {
        let d = beta.len();
        let mut quad = 0.0;
        for i in 0..d {
            let row: f64 = (0..d).map(|j| self.xtx[(i, j)] * beta[j]).sum();
            quad += beta[i] * (row - 2.0 * self.xty[i]);
        }
        // clamp tiny negative rounding of a residual sum of squares
        ((self.yty + quad) / (2.0 * self.sigma2)).max(0.0)
    }

    fn gradient(&self, beta: &[f64], out: &mut [f64]) {
        let d = beta.len();
        for i in 0..d {
            let row: f64 = (0..d).map(|j| self.xtx[(i, j)] * beta[j]).sum();
            out[i] = (row - self.xty[i]) / self.sigma2;
        }
    }

    fn id(&self) -> &str {
        &self.id
    }
}

/// Posterior on `|beta|_1 <= s |beta_OLS|_1`.
pub fn lasso_posterior(
    data: &RegressionData,
    sigma2: Option<f64>,
    shrinkage: f64,
) -> Result<(RegressionPosterior, ConstraintSpec)> {
    bridge_posterior(data, sigma2, 1.0, shrinkage)
}

/// Posterior on `|beta|_q <= s |beta_OLS|_q`. `sigma2` defaults to the OLS
/// residual mean square.
pub fn bridge_posterior(
    data: &RegressionData,
    sigma2: Option<f64>,
    q: f64,
    shrinkage: f64,
) -> Result<(RegressionPosterior, ConstraintSpec)> {
    if !(q > 0.0) || !(shrinkage > 0.0) {
        return Err(Error::InvalidConfig(format!("need q > 0 and s > 0, got q = {q}, s = {shrinkage}")));
    }
    let (ols, mse) = data.ols()?;
    let radius = shrinkage * norm_q(&ols, q);
    let id = if q == 1.0 { "lasso".to_string() } else { format!("bridge_q{q}") };
    let target = RegressionPosterior::new(data, sigma2.unwrap_or(mse), id)?;
    Ok((target, ConstraintSpec::QNormBall { dim: ols.len(), q, radius }))
}
