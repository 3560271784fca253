//! Builds targets and constraint specs for each experiment tag.

use nalgebra::DMatrix;
use sphmc::geometry::ConstraintSpec;
use sphmc::io::load_regression_data;
use sphmc::linalg::matrix_from_rows;
use sphmc::targets::{
    box_gaussian_family, bridge_posterior, quantized_gp_posterior, synthetic_quantized_gp, DampedSine,
    DirichletMultinomial, Target, TruncatedGaussian,
};

use crate::config::{ExperimentConfig, ExperimentTag};
use crate::error::{CliError, CliResult};

pub const DEFAULT_SHRINKAGE: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// One posterior to sample; path experiments yield one per shrinkage value.
pub struct Problem {
    pub target: Box<dyn Target>,
    pub spec: ConstraintSpec,
    /// Starting point shared by every kernel, if the experiment fixes one.
    pub init: Option<Vec<f64>>,
    pub shrinkage: Option<f64>,
    /// Set for simplex problems, which SphLMC samples through the model directly.
    pub simplex: Option<DirichletMultinomial>,
}

impl Problem {
    fn new(target: Box<dyn Target>, spec: ConstraintSpec) -> Self {
        Self { target, spec, init: None, shrinkage: None, simplex: None }
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }
}

fn missing(what: &str) -> CliError {
    CliError::Config(format!("problem.{what} is required for this experiment"))
}

pub fn build(cfg: &ExperimentConfig) -> CliResult<Vec<Problem>> {
    let p = &cfg.problem;
    Ok(match cfg.experiment {
        ExperimentTag::Tmg2d => {
            let mean = p.mean.clone().unwrap_or_else(|| vec![0.0, 0.0]);
            let cov = match &p.cov {
                Some(rows) => matrix_from_rows(rows)?,
                None => DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]),
            };
            let spec = ConstraintSpec::Box {
                lower: p.lower.clone().unwrap_or_else(|| vec![0.0, 0.0]),
                upper: p.upper.clone().unwrap_or_else(|| vec![5.0, 1.0]),
            };
            spec.validate()?;
            let target: Box<dyn Target> = match p.density.as_deref().unwrap_or("gaussian") {
                "gaussian" => Box::new(TruncatedGaussian::new(mean, &cov)?),
                "damped_sine" => Box::new(DampedSine::new(mean, &cov)?),
                other => return Err(CliError::Config(format!("unknown density '{other}'"))),
            };
            if target.dim() != spec.dim() {
                return Err(CliError::Config("mean, cov and bounds disagree in dimension".into()));
            }
            vec![Problem::new(target, spec)]
        }
        ExperimentTag::TmgD => {
            let d = p.dim.unwrap_or(10);
            if d == 0 {
                return Err(CliError::Config("problem.dim must be positive".into()));
            }
            let target = TruncatedGaussian::new(vec![0.0; d], &box_gaussian_family(d))?;
            let mut upper = vec![0.5; d];
            upper[0] = 5.0;
            vec![Problem::new(Box::new(target), ConstraintSpec::Box { lower: vec![0.0; d], upper })]
        }
        ExperimentTag::LassoPath | ExperimentTag::BridgePath => {
            let path = cfg.dataset().ok_or_else(|| missing("dataset"))?;
            let mut data = load_regression_data(&path, p.response.as_deref())?;
            if p.standardize.unwrap_or(true) {
                data = data.standardized();
            }
            let q = match (cfg.experiment, p.q) {
                (ExperimentTag::LassoPath, None | Some(1.0)) => 1.0,
                (ExperimentTag::LassoPath, Some(q)) => {
                    return Err(CliError::Config(format!("lasso_path has q = 1, got {q}")))
                }
                (_, q) => q.ok_or_else(|| missing("q"))?,
            };
            let grid = p.shrinkage.clone().unwrap_or_else(|| DEFAULT_SHRINKAGE.to_vec());
            grid.iter()
                .map(|&s| {
                    let (target, spec) = bridge_posterior(&data, p.sigma2, q, s)?;
                    Ok(Problem { shrinkage: Some(s), ..Problem::new(Box::new(target), spec) })
                })
                .collect::<CliResult<_>>()?
        }
        ExperimentTag::QuantizedGp => {
            let n = p.points.unwrap_or(100);
            let spacing = p.spacing.unwrap_or(0.5);
            let (sigma2, eta2) = (p.sigma2.unwrap_or(0.6), p.eta2.unwrap_or(0.2));
            let levels = p.levels.clone().unwrap_or_else(|| vec![-0.75, -0.25, 0.25, 0.75]);
            let edges =
                p.edges.clone().unwrap_or_else(|| vec![f64::NEG_INFINITY, -0.5, 0.0, 0.5, f64::INFINITY]);
            let x: Vec<f64> = (0..n).map(|i| spacing * i as f64).collect();
            let data = synthetic_quantized_gp(&x, sigma2, eta2, &levels, &edges, p.data_seed.unwrap_or(cfg.seed))?;
            let post = quantized_gp_posterior(&x, sigma2, eta2, &data.observed, &levels, &edges)?;
            vec![Problem { init: Some(data.observed), ..Problem::new(Box::new(post.target), post.spec) }]
        }
        ExperimentTag::DirichletToy => {
            let counts = p.counts.clone().unwrap_or_else(|| vec![2.0, 3.0, 5.0]);
            let alpha = p.alpha.clone().unwrap_or_else(|| vec![0.5; counts.len()]);
            let model = DirichletMultinomial::new(counts, alpha)?;
            let spec = ConstraintSpec::Simplex { dim: model.dim() };
            vec![Problem { simplex: Some(model.clone()), ..Problem::new(Box::new(model), spec) }]
        }
    })
}
