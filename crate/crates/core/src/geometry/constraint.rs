//! Declarative description of a constrained domain.

use serde::{Deserialize, Serialize};

use super::functional::{side_at, LinearMap, QuadraticMap, Side};
use crate::error::{Error, Result};
use crate::linalg::{dot, matrix_from_rows, matvec, norm_q};

/// A norm-type constrained domain. Matrices are row-major; block indices
/// are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSpec {
    /// `|beta|_2 <= 1`
    UnitBall { dim: usize },
    /// `lower <= beta <= upper` elementwise.
    #[serde(alias = "hyper_rectangle")]
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `|beta|_q <= radius`
    #[serde(rename = "qnorm_ball")]
    QNormBall { dim: usize, q: f64, radius: f64 },
    /// Probability simplex with `dim` components.
    Simplex { dim: usize },
    /// `lower <= A beta <= upper`
    LinearBox { a: Vec<Vec<f64>>, lower: Vec<f64>, upper: Vec<f64> },
    /// `lower <= beta^T A beta + b^T beta <= upper`
    QuadraticRing { a: Vec<Vec<f64>>, b: Vec<f64>, lower: f64, upper: f64 },
    /// `beta_i >= bound_i` (or `<=` where `sides[i]` is `upper`; missing entries are `lower`).
    OneSided {
        bound: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        sides: Vec<Side>,
    },
    Blocked { blocks: Vec<Block> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub indices: Vec<usize>,
    pub spec: ConstraintSpec,
}

impl ConstraintSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::UnitBall { dim } | Self::QNormBall { dim, .. } | Self::Simplex { dim } => *dim,
            Self::Box { lower, .. } | Self::LinearBox { lower, .. } => lower.len(),
            Self::QuadraticRing { b, .. } => b.len(),
            Self::OneSided { bound, .. } => bound.len(),
            Self::Blocked { blocks } => blocks.iter().map(|b| b.indices.len()).sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConstraint(m));
        match self {
            Self::UnitBall { dim } | Self::Simplex { dim } if *dim == 0 => bad("dimension must be positive".into()),
            Self::UnitBall { .. } | Self::Simplex { .. } => Ok(()),
            Self::Box { lower, upper } => check_bounds(lower, upper),
            Self::QNormBall { dim, q, radius } => {
                if *dim == 0 {
                    bad("dimension must be positive".into())
                } else if !(*q > 0.0 && q.is_finite()) {
                    bad(format!("q = {q} must be positive and finite"))
                } else if !(*radius > 0.0 && radius.is_finite()) {
                    bad(format!("radius = {radius} must be positive"))
                } else {
                    Ok(())
                }
            }
            Self::LinearBox { a, lower, upper } => {
                check_bounds(lower, upper)?;
                let m = matrix_from_rows(a)?;
                if m.nrows() != lower.len() {
                    return bad("matrix and bounds disagree in size".into());
                }
                LinearMap::new(m).map(|_| ())
            }
            Self::QuadraticRing { a, b, lower, upper } => {
                if !(*lower > 0.0 && upper > lower) {
                    return bad(format!("ring bounds must satisfy 0 < l < u, got ({lower}, {upper})"));
                }
                QuadraticMap::new(matrix_from_rows(a)?, b.clone(), *lower, *upper).map(|_| ())
            }
            Self::OneSided { bound, sides } => {
                if bound.is_empty() || bound.iter().any(|b| !b.is_finite()) {
                    return bad("one-sided bounds must be finite".into());
                }
                if sides.len() > bound.len() {
                    return bad("more sides than bounds".into());
                }
                Ok(())
            }
            Self::Blocked { blocks } => {
                let d = self.dim();
                let mut seen = vec![false; d];
                for blk in blocks {
                    if matches!(blk.spec, Self::Blocked { .. }) {
                        return bad("nested blocks are not supported".into());
                    }
                    blk.spec.validate()?;
                    if blk.spec.dim() != blk.indices.len() {
                        return bad("block index count differs from its constraint dimension".into());
                    }
                    for &i in &blk.indices {
                        if i >= d || seen[i] {
                            return bad(format!("block indices do not partition 0..{d}"));
                        }
                        seen[i] = true;
                    }
                }
                Ok(())
            }
        }
    }

    /// Membership test with absolute tolerance `tol` on the boundary.
    pub fn contains(&self, beta: &[f64], tol: f64) -> bool {
        if beta.len() != self.dim() || beta.iter().any(|b| b.is_nan()) {
            return false;
        }
        match self {
            Self::UnitBall { .. } => dot(beta, beta) <= 1.0 + tol,
            Self::Box { lower, upper } => in_box(beta, lower, upper, tol),
            Self::QNormBall { q, radius, .. } => norm_q(beta, *q) <= radius * (1.0 + tol),
            Self::Simplex { .. } => {
                beta.iter().all(|&b| b >= -tol) && (beta.iter().sum::<f64>() - 1.0).abs() <= tol * beta.len() as f64
            }
            Self::LinearBox { a, lower, upper } => match matrix_from_rows(a) {
                Ok(m) => {
                    let mut eta = vec![0.0; beta.len()];
                    matvec(&m, beta, &mut eta);
                    in_box(&eta, lower, upper, tol)
                }
                Err(_) => false,
            },
            Self::QuadraticRing { a, b, lower, upper } => match matrix_from_rows(a) {
                Ok(m) => {
                    let mut ab = vec![0.0; beta.len()];
                    matvec(&m, beta, &mut ab);
                    let f = dot(beta, &ab) + dot(b, beta);
                    f >= lower - tol * lower.abs().max(1.0) && f <= upper + tol * upper.abs().max(1.0)
                }
                Err(_) => false,
            },
            Self::OneSided { bound, sides } => bound.iter().enumerate().all(|(i, l)| match side_at(sides, i) {
                Side::Lower => beta[i] >= l - tol,
                Side::Upper => beta[i] <= l + tol,
            }),
            Self::Blocked { blocks } => blocks.iter().all(|blk| {
                let sub: Vec<f64> = blk.indices.iter().map(|&i| beta[i]).collect();
                blk.spec.contains(&sub, tol)
            }),
        }
    }

    /// Per-coordinate `(lower, upper)` bounds when the domain is a product of
    /// intervals (box, one-sided, or blocks of these); infinite entries mark
    /// open sides.
    pub fn interval_bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Self::Box { lower, upper } => Some((lower.clone(), upper.clone())),
            Self::OneSided { bound, sides } => {
                let mut lo = vec![f64::NEG_INFINITY; bound.len()];
                let mut hi = vec![f64::INFINITY; bound.len()];
                for (i, &b) in bound.iter().enumerate() {
                    match side_at(sides, i) {
                        Side::Lower => lo[i] = b,
                        Side::Upper => hi[i] = b,
                    }
                }
                Some((lo, hi))
            }
            Self::Blocked { blocks } => {
                let d = self.dim();
                let mut lo = vec![f64::NEG_INFINITY; d];
                let mut hi = vec![f64::INFINITY; d];
                for blk in blocks {
                    let (l, u) = blk.spec.interval_bounds()?;
                    for (k, &i) in blk.indices.iter().enumerate() {
                        lo[i] = l[k];
                        hi[i] = u[k];
                    }
                }
                Some((lo, hi))
            }
            _ => None,
        }
    }
}

fn check_bounds(lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.is_empty() || lower.len() != upper.len() {
        return Err(Error::InvalidConstraint("bounds must be non-empty and of equal length".into()));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
        return Err(Error::InvalidConstraint("bounds must be finite with lower < upper".into()));
    }
    Ok(())
}

fn in_box(x: &[f64], lower: &[f64], upper: &[f64], tol: f64) -> bool {
    x.iter()
        .zip(lower.iter().zip(upper))
        .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
}
