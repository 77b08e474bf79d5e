//! Exact rational matrices and span arithmetic.
//!
//! Everything that decides an algebraic yes/no question (bracket membership,
//! ideal tests, root extraction) goes through this module. Nothing here
//! touches floating point except the explicit `to_f64` conversions.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"p/q"` or `"p"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Argument(format!("not a rational literal: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(n, d))
        }
        None => Ok(Q::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn format_rational(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Dense row-major matrix over the rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            data: vec![Q::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    /// The matrix unit `E_ij` of size `n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.set(i, j, Q::one());
        m
    }

    pub fn from_ints(rows: usize, cols: usize, entries: &[i64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        QMatrix {
            rows,
            cols,
            data: entries.iter().map(|&e| q(e)).collect(),
        }
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<Q>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(QMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Q) {
        self.data[i * self.cols + j] = v;
    }

    /// Row-major entries; this is the coordinate vector used for span tests.
    pub fn flat(&self) -> &[Q] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn scale(&self, s: &Q) -> Self {
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> Q {
        (0..self.rows.min(self.cols)).fold(Q::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn try_mul(&self, other: &QMatrix) -> Result<QMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.data[idx] += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn try_add(&self, other: &QMatrix) -> Result<QMatrix> {
        self.check_same_shape(other)?;
        Ok(QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn try_sub(&self, other: &QMatrix) -> Result<QMatrix> {
        self.check_same_shape(other)?;
        Ok(QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    fn check_same_shape(&self, other: &QMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "shape {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    /// Commutator `XY - YX`.
    pub fn bracket(&self, other: &QMatrix) -> Result<QMatrix> {
        if self.rows != self.cols || self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "bracket needs equal square shapes, got {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    /// Linear combination `Σ c_i M_i` of equally shaped matrices.
    pub fn combination(coeffs: &[Q], mats: &[QMatrix]) -> QMatrix {
        assert_eq!(coeffs.len(), mats.len());
        assert!(!mats.is_empty());
        let (r, c) = mats[0].shape();
        let mut out = Self::zeros(r, c);
        for (a, m) in coeffs.iter().zip(mats) {
            if a.is_zero() {
                continue;
            }
            for (o, x) in out.data.iter_mut().zip(&m.data) {
                if !x.is_zero() {
                    *o += a * x;
                }
            }
        }
        out
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| to_f64(self.get(i, j)))
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| format_rational(self.get(i, j))).collect())
            .collect()
    }

    pub fn from_strings(rows: &[Vec<String>]) -> Result<QMatrix> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        let data = rows
            .iter()
            .flatten()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>>>()?;
        QMatrix::from_flat(r, c, data)
    }
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, row) in self.to_strings().iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl Serialize for QMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for QMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<String>>::deserialize(d)?;
        QMatrix::from_strings(&rows).map_err(serde::de::Error::custom)
    }
}

impl<'a> Add<&'a QMatrix> for &'a QMatrix {
    type Output = QMatrix;
    fn add(self, rhs: &QMatrix) -> QMatrix {
        self.try_add(rhs).expect("shape mismatch in add")
    }
}

impl<'a> Sub<&'a QMatrix> for &'a QMatrix {
    type Output = QMatrix;
    fn sub(self, rhs: &QMatrix) -> QMatrix {
        self.try_sub(rhs).expect("shape mismatch in sub")
    }
}

impl<'a> Mul<&'a QMatrix> for &'a QMatrix {
    type Output = QMatrix;
    fn mul(self, rhs: &QMatrix) -> QMatrix {
        self.try_mul(rhs).expect("shape mismatch in mul")
    }
}

impl Neg for &QMatrix {
    type Output = QMatrix;
    fn neg(self) -> QMatrix {
        self.scale(&q(-1))
    }
}

pub fn serialize_q<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    format_rational(x).serialize(s)
}

pub fn serialize_qvec<S: Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(format_rational).collect::<Vec<_>>().serialize(s)
}

pub fn deserialize_qvec<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
    Vec::<String>::deserialize(d)?
        .iter()
        .map(|s| parse_rational(s))
        .collect::<Result<Vec<_>>>()
        .map_err(serde::de::Error::custom)
}

/// `dst -= factor * src`, skipping zero entries of `src`.
fn axpy_neg(dst: &mut [Q], factor: &Q, src: &[Q]) {
    for (d, s) in dst.iter_mut().zip(src) {
        if !s.is_zero() {
            *d -= factor * s;
        }
    }
}

/// Echelon basis of the span of a set of vectors in `Q^dim`.
///
/// Rows are kept so that every row vanishes on the pivot columns of all
/// earlier rows, which makes a single forward pass a full reduction. Each
/// row remembers which combination of the original generators produced it,
/// so coordinates with respect to the generators can be recovered.
#[derive(Clone, Debug)]
pub struct Span {
    dim: usize,
    rows: Vec<Vec<Q>>,
    pivots: Vec<usize>,
    combos: Vec<Vec<Q>>,
    generators: usize,
    independent: Vec<usize>,
}

impl Span {
    pub fn new(dim: usize) -> Self {
        Span {
            dim,
            rows: Vec::new(),
            pivots: Vec::new(),
            combos: Vec::new(),
            generators: 0,
            independent: Vec::new(),
        }
    }

    pub fn from_vectors<'a>(dim: usize, vectors: impl IntoIterator<Item = &'a [Q]>) -> Self {
        let mut s = Span::new(dim);
        for v in vectors {
            s.push(v);
        }
        s
    }

    pub fn from_matrices(mats: &[QMatrix]) -> Self {
        let dim = mats.first().map_or(0, |m| m.rows * m.cols);
        Span::from_vectors(dim, mats.iter().map(QMatrix::flat))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn generator_count(&self) -> usize {
        self.generators
    }

    /// Indices of the generators that increased the rank when pushed.
    pub fn independent_generators(&self) -> &[usize] {
        &self.independent
    }

    /// Adds a generator; returns true if it was independent of the others.
    pub fn push(&mut self, v: &[Q]) -> bool {
        assert_eq!(v.len(), self.dim, "vector length does not match span dimension");
        let idx = self.generators;
        self.generators += 1;
        for c in &mut self.combos {
            c.push(Q::zero());
        }
        let mut combo = vec![Q::zero(); self.generators];
        combo[idx] = Q::one();
        let mut res = v.to_vec();
        self.reduce_in_place(&mut res, &mut combo);
        let Some(p) = res.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = res[p].recip();
        for x in res.iter_mut() {
            *x *= &inv;
        }
        for c in combo.iter_mut() {
            *c *= &inv;
        }
        self.rows.push(res);
        self.pivots.push(p);
        self.combos.push(combo);
        self.independent.push(idx);
        true
    }

    fn reduce_in_place(&self, v: &mut [Q], combo: &mut [Q]) {
        for ((row, &p), rc) in self.rows.iter().zip(&self.pivots).zip(&self.combos) {
            if v[p].is_zero() {
                continue;
            }
            let f = v[p].clone();
            axpy_neg(v, &f, row);
            axpy_neg(combo, &f, rc);
        }
    }

    /// Residual of `v` after elimination against the span; zero iff `v` is in the span.
    pub fn residual(&self, v: &[Q]) -> Vec<Q> {
        let mut res = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if res[p].is_zero() {
                continue;
            }
            let f = res[p].clone();
            axpy_neg(&mut res, &f, row);
        }
        res
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        self.residual(v).iter().all(Zero::is_zero)
    }

    /// Coordinates of `v` with respect to the generators, if `v` is in the span.
    /// Dependent generators receive coefficient zero.
    pub fn coords(&self, v: &[Q]) -> Option<Vec<Q>> {
        let mut res = v.to_vec();
        let mut acc = vec![Q::zero(); self.generators];
        for ((row, &p), rc) in self.rows.iter().zip(&self.pivots).zip(&self.combos) {
            if res[p].is_zero() {
                continue;
            }
            let f = res[p].clone();
            axpy_neg(&mut res, &f, row);
            for (a, r) in acc.iter_mut().zip(rc) {
                if !r.is_zero() {
                    *a += &f * r;
                }
            }
        }
        if res.iter().all(Zero::is_zero) {
            Some(acc)
        } else {
            None
        }
    }

    pub fn contains_span(&self, other: &Span) -> bool {
        other.rows.iter().all(|r| self.contains(r))
    }
}

/// Basis of the right null space `{x : A x = 0}` for a matrix given as rows.
pub fn kernel(rows: &[Vec<Q>], ncols: usize) -> Vec<Vec<Q>> {
    let (rref, pivots) = rref(rows, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Q::zero(); ncols];
            x[f] = Q::one();
            for (row, &p) in rref.iter().zip(&pivots) {
                x[p] = -row[f].clone();
            }
            x
        })
        .collect()
}

/// Reduced row echelon form; returns the nonzero rows and their pivot columns.
pub fn rref(rows: &[Vec<Q>], ncols: usize) -> (Vec<Vec<Q>>, Vec<usize>) {
    let mut m: Vec<Vec<Q>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(pr) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, pr);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                axpy_neg(row, &f, &pivot_row);
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    m.truncate(r);
    (m, pivots)
}

/// Solves `A x = b` exactly for square nonsingular `A` (rows given).
pub fn solve(a: &[Vec<Q>], b: &[Q]) -> Result<Vec<Q>> {
    let n = b.len();
    let aug: Vec<Vec<Q>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let (red, pivots) = rref(&aug, n + 1);
    if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return Err(Error::Numeric("singular exact system".into()));
    }
    Ok(red.iter().map(|row| row[n].clone()).collect())
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

/// Largest absolute value, used for regular-functional scaling.
pub fn max_abs(v: &[Q]) -> Q {
    v.iter().map(Signed::abs).fold(Q::zero(), |a, b| if b > a { b } else { a })
}
