use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::gaussian::TruncatedGaussian;
use crate::error::{Error, Result};
use crate::geometry::{Block, ConstraintSpec, Side};
use crate::linalg::spd_inverse;

const JITTER: f64 = 1e-8;

/// Squared-exponential Gram matrix `sigma2 exp(-|x_i - x_j|^2 / (2 eta2))`.
pub fn se_kernel(x: &[f64], sigma2: f64, eta2: f64) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), x.len(), |i, j| sigma2 * (-(x[i] - x[j]).powi(2) / (2.0 * eta2)).exp())
}

/// Index `k` with `edges[k] <= y < edges[k + 1]`.
pub fn quantize(y: f64, edges: &[f64]) -> usize {
    let k = edges.partition_point(|&z| z <= y);
    k.saturating_sub(1).min(edges.len() - 2)
}

/// Latent GP draw and its quantized projection.
#[derive(Debug, Clone)]
pub struct QuantizedGpData {
    pub x: Vec<f64>,
    pub latent: Vec<f64>,
    pub bins: Vec<usize>,
    pub observed: Vec<f64>,
}

/// Draws `y ~ N(0, K)` on `x` with a seeded generator and quantizes it.
pub fn synthetic_quantized_gp(
    x: &[f64],
    sigma2: f64,
    eta2: f64,
    levels: &[f64],
    edges: &[f64],
    seed: u64,
) -> Result<QuantizedGpData> {
    check_levels(levels, edges)?;
    let k = se_kernel(x, sigma2, eta2);
    let (_, l) = spd_inverse(&k, Some(JITTER))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..x.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let latent: Vec<f64> = (0..x.len()).map(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum()).collect();
    let bins: Vec<usize> = latent.iter().map(|&y| quantize(y, edges)).collect();
    let observed = bins.iter().map(|&b| levels[b]).collect();
    Ok(QuantizedGpData { x: x.to_vec(), latent, bins, observed })
}

fn check_levels(levels: &[f64], edges: &[f64]) -> Result<()> {
    if edges.len() != levels.len() + 1 || levels.is_empty() {
        return Err(Error::InvalidConfig("need one more bin edge than quantization levels".into()));
    }
    if edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig("bin edges must increase".into()));
    }
    Ok(())
}

/// Posterior of the latent process given quantized observations.
#[derive(Debug, Clone)]
pub struct QuantizedGp {
    pub target: TruncatedGaussian,
    pub spec: ConstraintSpec,
    /// Gram matrix and its Cholesky factor (after any jitter).
    pub gram: DMatrix<f64>,
    pub cholesky: DMatrix<f64>,
    /// Observation bin of every grid point.
    pub bins: Vec<usize>,
}

/// `U(y) = y^T K^{-1} y / 2` truncated to the observed bins. Two-sided bins
/// form one box block; bins open on one side form a one-sided block.
pub fn quantized_gp_posterior(
    x: &[f64],
    sigma2: f64,
    eta2: f64,
    observed: &[f64],
    levels: &[f64],
    edges: &[f64],
) -> Result<QuantizedGp> {
    check_levels(levels, edges)?;
    crate::error::check_dim(x.len(), observed.len())?;
    let gram = se_kernel(x, sigma2, eta2);
    let (precision, cholesky) = spd_inverse(&gram, Some(JITTER))?;
    let target = TruncatedGaussian::from_precision(vec![0.0; x.len()], precision).with_id("quantized_gp");

    let mut bins = Vec::with_capacity(observed.len());
    let (mut box_idx, mut lo, mut hi) = (Vec::new(), Vec::new(), Vec::new());
    let (mut os_idx, mut bound, mut sides) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &f) in observed.iter().enumerate() {
        let k = levels
            .iter()
            .position(|&q| (q - f).abs() <= 1e-12 * q.abs().max(1.0))
            .ok_or_else(|| Error::InvalidConfig(format!("observation {f} is not a quantization level")))?;
        bins.push(k);
        let (a, b) = (edges[k], edges[k + 1]);
        match (a.is_finite(), b.is_finite()) {
            (true, true) => {
                box_idx.push(i);
                lo.push(a);
                hi.push(b);
            }
            (true, false) => {
                os_idx.push(i);
                bound.push(a);
                sides.push(Side::Lower);
            }
            (false, true) => {
                os_idx.push(i);
                bound.push(b);
                sides.push(Side::Upper);
            }
            (false, false) => return Err(Error::InvalidConfig("a bin must have a finite edge".into())),
        }
    }
    let mut blocks = Vec::new();
    if !box_idx.is_empty() {
        blocks.push(Block { indices: box_idx, spec: ConstraintSpec::Box { lower: lo, upper: hi } });
    }
    if !os_idx.is_empty() {
        blocks.push(Block { indices: os_idx, spec: ConstraintSpec::OneSided { bound, sides } });
    }
    let spec = ConstraintSpec::Blocked { blocks };
    spec.validate()?;
    Ok(QuantizedGp { target, spec, gram, cholesky, bins })
}
