//! Double-precision helpers shared by the geometric layers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Matrix exponential.
///
/// Nilpotent arguments (the root-space generators) are summed exactly up to
/// the vanishing power; diagonal arguments are exponentiated entrywise;
/// everything else goes through nalgebra's scaling-and-squaring Padé routine.
pub fn expm(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    if is_diagonal(x) {
        let mut e = DMatrix::zeros(n, n);
        for i in 0..n {
            e[(i, i)] = x[(i, i)].exp();
        }
        return e;
    }
    if let Some(e) = nilpotent_exp(x) {
        return e;
    }
    x.clone().exp()
}

fn is_diagonal(x: &DMatrix<f64>) -> bool {
    let n = x.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || x[(i, j)] == 0.0))
}

fn nilpotent_exp(x: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = x.nrows();
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=n {
        term = &term * x / k as f64;
        if term.iter().all(|v| *v == 0.0) {
            return Some(sum);
        }
        sum += &term;
    }
    // A nilpotent n x n matrix satisfies X^n = 0; getting here means it is not.
    None
}

/// Orthonormal basis (as columns) of the span of the given columns.
pub fn orthonormal_columns(cols: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    if cols.ncols() == 0 {
        return DMatrix::zeros(cols.nrows(), 0);
    }
    let svd = cols.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > rank_tol * smax.max(1.0))
        .map(|(i, _)| i)
        .collect();
    DMatrix::from_fn(cols.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Largest sine of the principal angles between two column spans.
///
/// Spans of different dimension are at gap 1.
pub fn subspace_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = orthonormal_columns(a, 1e-12);
    let qb = orthonormal_columns(b, 1e-12);
    if qa.ncols() != qb.ncols() {
        return 1.0;
    }
    if qa.ncols() == 0 {
        return 0.0;
    }
    let proj = &qb * (qb.transpose() * &qa);
    let resid = &qa - proj;
    let s = resid.svd(false, false).singular_values;
    s.iter().cloned().fold(0.0, f64::max).min(1.0)
}

/// Lower Cholesky factor with positive diagonal.
pub fn cholesky_lower(p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    nalgebra::Cholesky::new(p.clone())
        .map(|c| c.l())
        .ok_or_else(|| Error::Numeric("matrix is not positive definite".into()))
}

/// Flattens a matrix column-major into a vector of entries.
pub fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
    m.iter().copied().collect()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Radical-inverse (Halton) sequence in `[0,1)^dim`, skipping index 0.
pub fn halton(index: usize, dim: usize) -> Vec<f64> {
    const PRIMES: [u64; 32] = [
        2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101,
        103, 107, 109, 113, 127, 131,
    ];
    assert!(dim <= PRIMES.len(), "halton sequence supports up to 32 dimensions");
    (0..dim)
        .map(|d| {
            let base = PRIMES[d];
            let mut i = index as u64 + 1;
            let mut f = 1.0;
            let mut r = 0.0;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}
