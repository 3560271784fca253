//! Small dense-vector helpers shared by the transforms and integrators.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    norm2_sq(a).sqrt()
}

#[inline]
pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

/// Returns `(max |a_i|, argmax)`; `(0, 0)` for an empty slice.
#[inline]
pub fn norm_inf(a: &[f64]) -> (f64, usize) {
    a.iter()
        .enumerate()
        .fold((0.0, 0), |(m, k), (i, x)| if x.abs() > m { (x.abs(), i) } else { (m, k) })
}

pub fn norm_q(a: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return norm_inf(a).0;
    }
    a.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q)
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn matvec(a: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    let (rows, cols) = a.shape();
    debug_assert_eq!(cols, x.len());
    for (i, o) in out.iter_mut().enumerate().take(rows) {
        let mut s = 0.0;
        for j in 0..cols {
            s += a[(i, j)] * x[j];
        }
        *o = s;
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidConstraint("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect()
}

/// Symmetric positive-definite inverse by Cholesky, retrying once with a
/// diagonal jitter when the first factorisation fails.
pub fn spd_inverse(a: &DMatrix<f64>, jitter: Option<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let sym = (a + a.transpose()) * 0.5;
    if let Some(ch) = sym.clone().cholesky() {
        let l = ch.l();
        return Ok((ch.inverse(), l));
    }
    if let Some(j) = jitter {
        let n = sym.nrows();
        let jittered = sym + DMatrix::<f64>::identity(n, n) * j;
        if let Some(ch) = jittered.cholesky() {
            let l = ch.l();
            return Ok((ch.inverse(), l));
        }
    }
    Err(Error::NotSpd)
}
