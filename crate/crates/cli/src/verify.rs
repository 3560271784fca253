//! Self-checks run by `sphmc verify`: integrator order, change-of-variables
//! Jacobians against finite differences, and samplers against posteriors
//! with known moments.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphmc::dynamics::{geodesic_flow, sample_tangent_velocity, Integrator, IntegratorConfig, ProductState};
use sphmc::geometry::functional::ball_to_ring;
use sphmc::geometry::norms::{ball_to_qnorm, ball_to_rectangle};
use sphmc::geometry::sphere::{ball_to_sphere, rect_to_sphere, sphere_to_ball, sphere_to_rect};
use sphmc::geometry::{Chart, ConstraintSpec, Coordinates, LinearMap};
use sphmc::samplers::{run_chain, ChainConfig, SphHmc, SphLmc};
use sphmc::targets::{pullback_gradient, DirichletMultinomial, Target, TruncatedGaussian};

const SEED: u64 = 7;

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

pub fn run_all() -> Vec<Check> {
    vec![
        order_check(Coordinates::Cartesian),
        order_check(Coordinates::Spherical),
        jacobian_check(),
        pullback_check(),
        geodesic_check(),
        dirichlet_check(),
        truncated_normal_check(),
    ]
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
}

/// Global error of the leapfrog end point at time 1 under step halving. The
/// chart and start are chosen so the trajectory stays on one smooth piece
/// of the coordinate map; crossings are counted and fail the check.
fn order_check(coords: Coordinates) -> Check {
    let (target, spec, start, name) = match coords {
        Coordinates::Cartesian => (
            TruncatedGaussian::new(vec![0.2, -0.1, 0.3], &DMatrix::from_diagonal_element(3, 3, 0.5)).unwrap(),
            ConstraintSpec::UnitBall { dim: 3 },
            vec![0.1, 0.2, -0.1],
            "leapfrog order (c-SphHMC)",
        ),
        Coordinates::Spherical => (
            TruncatedGaussian::new(vec![0.0, 0.0], &DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])).unwrap(),
            ConstraintSpec::Box { lower: vec![0.0, 0.0], upper: vec![5.0, 1.0] },
            vec![1.0, 0.8],
            "leapfrog order (s-SphHMC)",
        ),
    };
    let chart = Chart::new(&spec, coords).unwrap();
    let pos0 = chart.initial_position(Some(&start)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut vel0 = Integrator::new(&chart, &target, IntegratorConfig::new(0.1, 1).unwrap()).sample_velocity(&pos0, &mut rng);
    vel0.iter_mut().flatten().for_each(|v| *v *= 0.3);
    // the angle chart of a box folds at last angle = pi
    let piece = |pos: &[Vec<f64>]| coords == Coordinates::Spherical && pos[0][pos[0].len() - 1] > PI;
    let mut crossings = 0;
    let mut endpoint = |eps: f64| -> Option<Vec<f64>> {
        let integ = Integrator::new(&chart, &target, IntegratorConfig::new(eps, 1).ok()?);
        let mut s = ProductState { pos: pos0.clone(), vel: vel0.clone() };
        let mut side = piece(&s.pos);
        for _ in 0..(1.0 / eps).round() as usize {
            integ.leapfrog(&mut s).ok()?;
            crossings += usize::from(piece(&s.pos) != side);
            side = piece(&s.pos);
        }
        Some(s.pos.concat())
    };
    let Some(reference) = endpoint(1.25e-4) else {
        return Check { name, pass: false, detail: "reference trajectory failed".into() };
    };
    let mut pts = Vec::new();
    for eps in [0.1, 0.05, 0.025, 0.0125] {
        let Some(p) = endpoint(eps) else {
            return Check { name, pass: false, detail: format!("trajectory at eps {eps} failed") };
        };
        let err = p.iter().zip(&reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        pts.push((f64::ln(eps), err.ln()));
    }
    let k = slope(&pts);
    Check {
        name,
        pass: (1.8..=2.2).contains(&k) && crossings == 0,
        detail: format!("slope {k:.3}, chart kinks crossed {crossings}"),
    }
}

fn fd_jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> DMatrix<f64> {
    let h = 1e-6;
    let m = f(x).len();
    let mut j = DMatrix::zeros(m, x.len());
    for k in 0..x.len() {
        let (mut p, mut q) = (x.to_vec(), x.to_vec());
        p[k] += h;
        q[k] -= h;
        let (fp, fq) = (f(&p), f(&q));
        for i in 0..m {
            j[(i, k)] = (fp[i] - fq[i]) / (2.0 * h);
        }
    }
    j
}

/// `log sqrt(det J^T J)`, the log volume factor of a possibly non-square map.
fn fd_log_volume(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> f64 {
    let j = fd_jacobian(f, x);
    0.5 * (j.transpose() * &j).determinant().ln()
}

fn ball_point<R: Rng>(d: usize, r: f64, rng: &mut R) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = r * rng.random_range(0.05..0.95) / n;
    v.iter().map(|x| x * scale).collect()
}

/// Every log weight returned by a coordinate map against the finite
/// difference volume factor of the same map.
fn jacobian_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (lo, hi) = ([-1.0, 0.5, 2.0], [2.0, 1.5, 2.25]);
    let lin = LinearMap::new(DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, -0.3, 1.0, 0.2, 0.0, 0.4, 2.0])).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let th = ball_point(3, 1.0, &mut rng);
        let mut cases: Vec<(f64, f64)> = Vec::new();
        for q in [0.5, 1.0, 1.5, 4.0] {
            let f = move |t: &[f64]| ball_to_qnorm(t, q).0;
            cases.push((ball_to_qnorm(&th, q).1, fd_log_volume(&f, &th)));
        }
        let f = |t: &[f64]| ball_to_rectangle(t, &lo, &hi).0;
        cases.push((ball_to_rectangle(&th, &lo, &hi).1, fd_log_volume(&f, &th)));
        let f = |t: &[f64]| lin.box_to_linear(t).0;
        cases.push((lin.box_to_linear(&th).1, fd_log_volume(&f, &th)));
        let f = |t: &[f64]| ball_to_ring(t, 1.0, 2.0).0;
        cases.push((ball_to_ring(&th, 1.0, 2.0).1, fd_log_volume(&f, &th)));
        // the sphere lifts carry the inverse volume factor
        let x = ball_to_sphere(&th).unwrap();
        let f = |t: &[f64]| ball_to_sphere(t).unwrap();
        cases.push((-sphere_to_ball(&x).1, fd_log_volume(&f, &th)));
        let ang = [rng.random_range(0.2..2.9), rng.random_range(0.2..2.9), rng.random_range(0.1..6.2)];
        let f = |t: &[f64]| rect_to_sphere(t).unwrap();
        cases.push((-sphere_to_rect(&rect_to_sphere(&ang).unwrap()).log_weight, fd_log_volume(&f, &ang)));
        for (got, want) in cases {
            worst = worst.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    Check { name: "Jacobian log-determinants", pass: worst < 1e-5, detail: format!("max rel err {worst:.2e} over 50 points x 10 maps") }
}

/// Chart pull-back gradients against finite differences of `U` composed
/// with the chart map.
fn pullback_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let tg = TruncatedGaussian::new(vec![0.3, -0.2, 0.1], &DMatrix::from_diagonal_element(3, 3, 0.7)).unwrap();
    let ball = ConstraintSpec::QNormBall { dim: 3, q: 1.5, radius: 2.0 };
    let cube = ConstraintSpec::Box { lower: vec![-1.0, 0.0, 0.5], upper: vec![1.0, 2.0, 0.75] };
    let mut worst: f64 = 0.0;
    for (spec, coords) in [(ball, Coordinates::Cartesian), (cube, Coordinates::Spherical)] {
        let chart = Chart::new(&spec, coords).unwrap();
        for _ in 0..25 {
            let pos = match coords {
                Coordinates::Cartesian => ball_to_sphere(&ball_point(3, 1.0, &mut rng)).unwrap(),
                // interior angles away from the folds of the box chart
                Coordinates::Spherical => vec![rng.random_range(0.3..1.2), rng.random_range(0.3..1.2), rng.random_range(0.3..1.2)],
            };
            let free = match coords {
                Coordinates::Cartesian => pos[..3].to_vec(),
                Coordinates::Spherical => pos.clone(),
            };
            let g = pullback_gradient(&tg, &chart, std::slice::from_ref(&pos));
            let composed = |t: &[f64]| {
                let p = match coords {
                    Coordinates::Cartesian => ball_to_sphere(t).unwrap(),
                    Coordinates::Spherical => t.to_vec(),
                };
                vec![tg.potential(&chart.map(&[p]).beta)]
            };
            let fd = fd_jacobian(&composed, &free);
            let num: f64 = (0..3).map(|i| (g[0][i] - fd[(0, i)]).powi(2)).sum::<f64>().sqrt();
            let den: f64 = fd.norm().max(1e-8);
            worst = worst.max(num / den);
        }
    }
    Check { name: "pull-back gradients", pass: worst < 1e-5, detail: format!("max rel err {worst:.2e}") }
}

fn geodesic_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut x = ball_to_sphere(&[0.3, -0.2, 0.5, 0.1]).unwrap();
    let mut v = sample_tangent_velocity(&x, &mut rng);
    let speed0 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let (mut norm_err, mut tan_err, mut speed_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..1000 {
        geodesic_flow(&mut x, &mut v, 0.1);
        norm_err = norm_err.max((x.iter().map(|a| a * a).sum::<f64>().sqrt() - 1.0).abs());
        tan_err = tan_err.max(x.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>().abs());
        speed_err = speed_err.max((v.iter().map(|a| a * a).sum::<f64>().sqrt() - speed0).abs());
    }
    Check {
        name: "geodesic flow invariants",
        pass: norm_err < 1e-12 && tan_err < 1e-12 && speed_err < 1e-12,
        detail: format!("| |x| - 1 | {norm_err:.1e}, |x.v| {tan_err:.1e}, speed drift {speed_err:.1e}"),
    }
}

fn dirichlet_check() -> Check {
    let model = DirichletMultinomial::new(vec![2.0, 3.0, 5.0], vec![0.5; 3]).unwrap();
    let truth = model.posterior_mean();
    let k = SphLmc::new(model, IntegratorConfig::new(0.3, 5).unwrap()).unwrap();
    let chain = match run_chain(&k, &ChainConfig::new(22_000, 2_000, SEED)) {
        Ok(c) => c,
        Err(e) => return Check { name: "SphLMC conjugate mean", pass: false, detail: e.to_string() },
    };
    let n = chain.len() as f64;
    let err = (0..3)
        .map(|j| (chain.series(j).iter().sum::<f64>() / n - truth[j]).abs())
        .fold(0.0, f64::max);
    Check { name: "SphLMC conjugate mean", pass: err < 0.01, detail: format!("max |E[pi] - truth| {err:.1e}") }
}

/// Weighted means of c- and s-SphHMC on `N(0.3, 0.5^2)` truncated to `[0, 1]`.
fn truncated_normal_check() -> Check {
    let (mu, sd) = (0.3, 0.5);
    let n = 4000;
    let dens = |x: f64| (-0.5 * ((x - mu) / sd).powi(2)).exp();
    let (mut z, mut m) = (0.0, 0.0);
    for i in 0..=n {
        let x = i as f64 / n as f64;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        z += w * dens(x);
        m += w * x * dens(x);
    }
    let truth = m / z;
    let spec = ConstraintSpec::Box { lower: vec![0.0], upper: vec![1.0] };
    let target = TruncatedGaussian::new(vec![mu], &DMatrix::from_element(1, 1, sd * sd)).unwrap();
    let mut worst: f64 = 0.0;
    for coords in [Coordinates::Cartesian, Coordinates::Spherical] {
        let k = SphHmc::new(&target, spec.clone(), coords, IntegratorConfig::new(0.4, 5).unwrap()).unwrap();
        let chain = match run_chain(&k, &ChainConfig::new(62_000, 2_000, SEED)) {
            Ok(c) => c,
            Err(e) => return Check { name: "truncated normal mean", pass: false, detail: e.to_string() },
        };
        let mean = match sphmc::diagnostics::weighted_moments(&chain.samples) {
            Ok(m) => m.mean[0],
            Err(e) => return Check { name: "truncated normal mean", pass: false, detail: e.to_string() },
        };
        worst = worst.max((mean - truth).abs());
    }
    Check {
        name: "truncated normal mean",
        pass: worst < 0.01,
        detail: format!("quadrature mean {truth:.4}, max error {worst:.1e}"),
    }
}
