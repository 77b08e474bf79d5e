//! Concrete matrix models of the ambient spaces.
//!
//! * `sl`: `SL(n,R)/SO(n)` realized as unimodular SPD matrices, `g.p = g p g^T`.
//! * `so1n`: real hyperbolic space `SO(1,n)^0/SO(n)` on the upper hyperboloid sheet.
//! * `hopf`: `U(n+1)` acting on the unit sphere `S^{2n+1}` of `C^{n+1} = R^{2(n+1)}`.
//!
//! Lie algebra data is exact. The point layer is double precision.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{kernel, q, qf, to_f64, QMatrix, Span, Q};
use crate::linalg::{cholesky_lower, expm, max_abs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Sl,
    So1n,
    Hopf,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Sl => "sl",
            ModelKind::So1n => "so1n",
            ModelKind::Hopf => "hopf",
        }
    }

    pub fn is_compact(self) -> bool {
        self == ModelKind::Hopf
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sl" => Ok(ModelKind::Sl),
            "so1n" => Ok(ModelKind::So1n),
            "hopf" => Ok(ModelKind::Hopf),
            other => Err(Error::config(
                "model",
                format!("unknown model {other:?}; expected sl, so1n or hopf"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointSpace {
    /// Symmetric positive-definite matrices of determinant one.
    UnimodularSpd,
    /// Vectors with Minkowski norm -1 and positive first coordinate.
    Hyperboloid,
    /// Unit vectors of `C^{n+1}` written as real vectors `(Re z, Im z)`.
    Sphere,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub group: f64,
    pub manifold: f64,
    pub sphere_norm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            group: 1e-9,
            manifold: 1e-9,
            sphere_norm: 1e-12,
        }
    }
}

/// Serializable model descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub name: ModelKind,
    pub n: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub model: ModelKind,
    /// Matrix for the SPD model, column vector otherwise.
    pub coords: DMatrix<f64>,
}

/// Lie algebra element in either exact or floating representation.
#[derive(Clone, Debug, PartialEq)]
pub enum Element {
    Exact(QMatrix),
    Float(DMatrix<f64>),
}

impl Element {
    pub fn to_f64(&self) -> DMatrix<f64> {
        match self {
            Element::Exact(m) => m.to_f64(),
            Element::Float(m) => m.clone(),
        }
    }
}

/// `XY - YX`. Exact inputs give an exact result; any float input promotes to doubles.
pub fn bracket(x: &Element, y: &Element) -> Result<Element> {
    match (x, y) {
        (Element::Exact(a), Element::Exact(b)) => a.bracket(b).map(Element::Exact),
        _ => {
            let (a, b) = (x.to_f64(), y.to_f64());
            if a.shape() != b.shape() || a.nrows() != a.ncols() {
                return Err(Error::Dimension(format!(
                    "bracket needs equal square shapes, got {:?} and {:?}",
                    a.shape(),
                    b.shape()
                )));
            }
            Ok(Element::Float(&a * &b - &b * &a))
        }
    }
}

pub fn bracket_f64(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// A concrete realization of `(G, K, M, o)`.
#[derive(Clone, Debug)]
pub struct MatrixModel {
    kind: ModelKind,
    n: usize,
    matrix_size: usize,
    basis: Vec<QMatrix>,
    basis_span: Span,
    killing_scale: Q,
    tolerances: Tolerances,
    origin: Point,
}

pub fn make_model(name: ModelKind, n: usize) -> Result<MatrixModel> {
    make_model_with(name, n, Tolerances::default())
}

pub fn make_model_with(name: ModelKind, n: usize, tolerances: Tolerances) -> Result<MatrixModel> {
    let min = match name {
        ModelKind::Sl | ModelKind::So1n => 2,
        ModelKind::Hopf => 1,
    };
    if n < min {
        return Err(Error::config(
            "n",
            format!("model {name} requires n >= {min}, got {n}"),
        ));
    }
    if n > 12 {
        return Err(Error::config("n", format!("n = {n} exceeds the supported size 12")));
    }
    for (field, v) in [
        ("tolerances.group", tolerances.group),
        ("tolerances.manifold", tolerances.manifold),
        ("tolerances.sphere_norm", tolerances.sphere_norm),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::config(field, format!("must be positive, got {v}")));
        }
    }
    let (matrix_size, basis, killing_scale, origin) = match name {
        ModelKind::Sl => {
            let origin = DMatrix::identity(n, n);
            (n, sl_basis(n), q(2 * n as i64), origin)
        }
        ModelKind::So1n => {
            let mut o = DMatrix::zeros(n + 1, 1);
            o[(0, 0)] = 1.0;
            (n + 1, so1n_basis(n), q(n as i64 - 1), o)
        }
        ModelKind::Hopf => {
            let mut o = DMatrix::zeros(2 * (n + 1), 1);
            o[(0, 0)] = 1.0;
            (2 * (n + 1), unitary_basis(n + 1), qf(1, 2), o)
        }
    };
    let basis_span = Span::from_matrices(&basis);
    debug_assert_eq!(basis_span.rank(), basis.len());
    Ok(MatrixModel {
        kind: name,
        n,
        matrix_size,
        basis,
        basis_span,
        killing_scale,
        tolerances,
        origin: Point {
            model: name,
            coords: origin,
        },
    })
}

/// Cartan subalgebra of the diagonal first, then all off-diagonal matrix units.
fn sl_basis(n: usize) -> Vec<QMatrix> {
    let mut b = Vec::with_capacity(n * n - 1);
    for k in 0..n - 1 {
        let mut h = QMatrix::zeros(n, n);
        h.set(k, k, q(1));
        h.set(k + 1, k + 1, q(-1));
        b.push(h);
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                b.push(QMatrix::unit(n, i, j));
            }
        }
    }
    b
}

/// Boosts `E_0i + E_i0` followed by rotations `E_ij - E_ji` (1 <= i < j <= n).
fn so1n_basis(n: usize) -> Vec<QMatrix> {
    let m = n + 1;
    let mut b = Vec::new();
    for i in 1..m {
        let mut x = QMatrix::unit(m, 0, i);
        x.set(i, 0, q(1));
        b.push(x);
    }
    for i in 1..m {
        for j in i + 1..m {
            let mut x = QMatrix::unit(m, i, j);
            x.set(j, i, q(-1));
            b.push(x);
        }
    }
    b
}

/// Real form `[[A, -B], [B, A]]` of `A + iB`.
fn complex_block(a: &QMatrix, b: &QMatrix) -> QMatrix {
    let k = a.rows();
    let mut m = QMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            m.set(i, j, a.get(i, j).clone());
            m.set(i + k, j + k, a.get(i, j).clone());
            m.set(i, j + k, -b.get(i, j).clone());
            m.set(i + k, j, b.get(i, j).clone());
        }
    }
    m
}

/// `u(k)`: `i E_jj`, then for `i < j` the real skew `E_ij - E_ji` and `i(E_ij + E_ji)`.
fn unitary_basis(k: usize) -> Vec<QMatrix> {
    let zero = QMatrix::zeros(k, k);
    let mut b = Vec::new();
    for j in 0..k {
        b.push(complex_block(&zero, &QMatrix::unit(k, j, j)));
    }
    for i in 0..k {
        for j in i + 1..k {
            let mut a = QMatrix::unit(k, i, j);
            a.set(j, i, q(-1));
            b.push(complex_block(&a, &zero));
            let mut s = QMatrix::unit(k, i, j);
            s.set(j, i, q(1));
            b.push(complex_block(&zero, &s));
        }
    }
    b
}

impl MatrixModel {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn name(&self) -> String {
        format!("{}({})", self.kind, self.n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Size of the matrices representing the algebra and the group.
    pub fn matrix_size(&self) -> usize {
        self.matrix_size
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[QMatrix] {
        &self.basis
    }

    /// `c` in `B(X, Y) = c tr(XY)`. For the compact unitary model this is the
    /// invariant trace form, since the Killing form of `u(n+1)` is degenerate on the center.
    pub fn killing_scale(&self) -> &Q {
        &self.killing_scale
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    pub fn origin(&self) -> &Point {
        &self.origin
    }

    pub fn point_space(&self) -> PointSpace {
        match self.kind {
            ModelKind::Sl => PointSpace::UnimodularSpd,
            ModelKind::So1n => PointSpace::Hyperboloid,
            ModelKind::Hopf => PointSpace::Sphere,
        }
    }

    pub fn descriptor(&self) -> ModelDescriptor {
        ModelDescriptor {
            name: self.kind,
            n: self.n,
            tolerances: self.tolerances.clone(),
        }
    }

    pub fn from_descriptor(d: &ModelDescriptor) -> Result<Self> {
        make_model_with(d.name, d.n, d.tolerances.clone())
    }

    /// Cartan involution: `-X^T` on the noncompact models, identity on the compact one.
    pub fn theta(&self, x: &QMatrix) -> QMatrix {
        match self.kind {
            ModelKind::Hopf => x.clone(),
            _ => -&x.transpose(),
        }
    }

    pub fn theta_f64(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self.kind {
            ModelKind::Hopf => x.clone(),
            _ => -x.transpose(),
        }
    }

    pub fn killing(&self, x: &QMatrix, y: &QMatrix) -> Result<Q> {
        Ok(&self.killing_scale * x.try_mul(y)?.trace())
    }

    /// `<X, Y> = -B(X, theta Y)`.
    pub fn inner(&self, x: &QMatrix, y: &QMatrix) -> Result<Q> {
        self.check_shape(x)?;
        self.check_shape(y)?;
        Ok(-self.killing(x, &self.theta(y))?)
    }

    pub fn inner_f64(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        let c = to_f64(&self.killing_scale);
        -c * (x * self.theta_f64(y)).trace()
    }

    fn check_shape(&self, x: &QMatrix) -> Result<()> {
        if x.shape() != (self.matrix_size, self.matrix_size) {
            return Err(Error::Dimension(format!(
                "expected {0}x{0} matrix for {1}, got {2:?}",
                self.matrix_size,
                self.name(),
                x.shape()
            )));
        }
        Ok(())
    }

    /// Coordinates of `x` in the model basis, or `None` if `x` is not in the algebra.
    pub fn coords(&self, x: &QMatrix) -> Option<Vec<Q>> {
        if x.shape() != (self.matrix_size, self.matrix_size) {
            return None;
        }
        self.basis_span.coords(x.flat())
    }

    pub fn contains(&self, x: &QMatrix) -> bool {
        self.coords(x).is_some()
    }

    pub fn from_coords(&self, c: &[Q]) -> QMatrix {
        QMatrix::combination(c, &self.basis)
    }

    /// Matrix of `ad X` in the model basis, as rows.
    pub fn ad_matrix(&self, x: &QMatrix) -> Result<Vec<Vec<Q>>> {
        let d = self.ambient_dim();
        let mut rows = vec![vec![Q::zero(); d]; d];
        for (k, b) in self.basis.iter().enumerate() {
            let col = self
                .coords(&x.bracket(b)?)
                .ok_or_else(|| Error::Argument("element is not in the algebra".into()))?;
            for (i, c) in col.into_iter().enumerate() {
                rows[i][k] = c;
            }
        }
        Ok(rows)
    }

    /// `tr(ad X ad Y)` computed from the adjoint representation.
    pub fn killing_from_ad(&self, x: &QMatrix, y: &QMatrix) -> Result<Q> {
        let ax = self.ad_matrix(x)?;
        let ay = self.ad_matrix(y)?;
        let d = ax.len();
        let mut t = Q::zero();
        for i in 0..d {
            for k in 0..d {
                if !ax[i][k].is_zero() && !ay[k][i].is_zero() {
                    t += &ax[i][k] * &ay[k][i];
                }
            }
        }
        Ok(t)
    }

    fn theta_eigenspace(&self, sign: i64) -> Vec<QMatrix> {
        // kernel of (theta - sign) written in basis coordinates
        let d = self.ambient_dim();
        let images: Vec<Vec<Q>> = self
            .basis
            .iter()
            .map(|b| {
                let tb = self.theta(b);
                self.coords(&tb).expect("theta preserves the algebra")
            })
            .collect();
        let rows: Vec<Vec<Q>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|k| {
                        let mut v = images[k][i].clone();
                        if i == k {
                            v -= q(sign);
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        kernel(&rows, d).iter().map(|c| self.from_coords(c)).collect()
    }

    /// `k`, the +1 eigenspace of theta.
    pub fn k_basis(&self) -> Vec<QMatrix> {
        self.theta_eigenspace(1)
    }

    /// `p`, the -1 eigenspace of theta.
    pub fn p_basis(&self) -> Vec<QMatrix> {
        self.theta_eigenspace(-1)
    }

    /// Factor turning the closed-form distance into the one induced by `<,>` on `p`.
    pub fn distance_scale(&self) -> f64 {
        let c = to_f64(&self.killing_scale);
        match self.kind {
            // geodesic exp(tX).I = exp(2tX); |X|^2 = c tr X^2
            ModelKind::Sl => (c / 4.0).sqrt(),
            // unit boost has |B|^2 = 2c and moves the base point by hyperbolic distance 1
            ModelKind::So1n => (2.0 * c).sqrt(),
            ModelKind::Hopf => 1.0,
        }
    }

    fn minkowski(&self) -> DMatrix<f64> {
        let mut j = DMatrix::identity(self.matrix_size, self.matrix_size);
        j[(0, 0)] = -1.0;
        j
    }

    /// Complex structure on `R^{2(n+1)}`.
    pub fn complex_structure(&self) -> DMatrix<f64> {
        let k = self.matrix_size / 2;
        let mut j = DMatrix::zeros(2 * k, 2 * k);
        for i in 0..k {
            j[(i, i + k)] = -1.0;
            j[(i + k, i)] = 1.0;
        }
        j
    }

    pub fn check_group(&self, g: &DMatrix<f64>) -> Result<()> {
        let m = self.matrix_size;
        if g.shape() != (m, m) {
            return Err(Error::Dimension(format!(
                "group element must be {m}x{m}, got {:?}",
                g.shape()
            )));
        }
        let tol = self.tolerances.group;
        let scale = max_abs(g).max(1.0).powi(2);
        match self.kind {
            ModelKind::Sl => {
                let det = g.determinant();
                if (det - 1.0).abs() > tol * scale.powi(m as i32 / 2).max(1.0) {
                    return Err(Error::Domain(format!("det g = {det}, expected 1")));
                }
            }
            ModelKind::So1n => {
                let j = self.minkowski();
                let err = max_abs(&(g.transpose() * &j * g - &j));
                if err > tol * scale {
                    return Err(Error::Domain(format!(
                        "g does not preserve the Minkowski form (error {err:e})"
                    )));
                }
                if g[(0, 0)] <= 0.0 {
                    return Err(Error::Domain("g reverses time orientation".into()));
                }
            }
            ModelKind::Hopf => {
                let err = max_abs(&(g.transpose() * g - DMatrix::identity(m, m)));
                let j = self.complex_structure();
                let cerr = max_abs(&(g * &j - &j * g));
                if err > tol || cerr > tol {
                    return Err(Error::Domain(format!(
                        "g is not unitary (orthogonality {err:e}, complex-linearity {cerr:e})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn validate_point(&self, p: &Point) -> Result<()> {
        if p.model != self.kind {
            return Err(Error::Argument(format!(
                "point belongs to {}, not {}",
                p.model, self.kind
            )));
        }
        let x = &p.coords;
        let tol = self.tolerances.manifold;
        match self.kind {
            ModelKind::Sl => {
                if x.shape() != (self.n, self.n) {
                    return Err(Error::Dimension(format!("expected {0}x{0} SPD matrix", self.n)));
                }
                let scale = max_abs(x).max(1.0);
                if max_abs(&(x - x.transpose())) > tol * scale {
                    return Err(Error::Domain("point is not symmetric".into()));
                }
                let l = cholesky_lower(x)
                    .map_err(|_| Error::Domain("point is not positive definite".into()))?;
                let logdet: f64 = (0..self.n).map(|i| 2.0 * l[(i, i)].ln()).sum();
                if logdet.abs() > tol {
                    return Err(Error::Domain(format!("det = exp({logdet:e}), expected 1")));
                }
            }
            ModelKind::So1n => {
                if x.shape() != (self.n + 1, 1) {
                    return Err(Error::Dimension(format!("expected vector of length {}", self.n + 1)));
                }
                let norm = minkowski_dot(x, x);
                if (norm + 1.0).abs() > tol * x[(0, 0)].powi(2).max(1.0) || x[(0, 0)] <= 0.0 {
                    return Err(Error::Domain(format!(
                        "not on the upper hyperboloid sheet (norm {norm})"
                    )));
                }
            }
            ModelKind::Hopf => {
                if x.shape() != (self.matrix_size, 1) {
                    return Err(Error::Dimension(format!(
                        "expected vector of length {}",
                        self.matrix_size
                    )));
                }
                let norm = x.norm();
                if (norm - 1.0).abs() > self.tolerances.sphere_norm {
                    return Err(Error::Domain(format!("not a unit vector (norm {norm})")));
                }
            }
        }
        Ok(())
    }

    /// Action of a group element on a point, after a group-membership check.
    pub fn act(&self, g: &DMatrix<f64>, p: &Point) -> Result<Point> {
        self.check_group(g)?;
        Ok(self.act_unchecked(g, p))
    }

    /// Action without the membership check, for inner loops over elements
    /// that are group elements by construction.
    pub fn act_unchecked(&self, g: &DMatrix<f64>, p: &Point) -> Point {
        let coords = match self.kind {
            ModelKind::Sl => {
                let y = g * &p.coords * g.transpose();
                (&y + y.transpose()) * 0.5
            }
            _ => g * &p.coords,
        };
        Point {
            model: self.kind,
            coords,
        }
    }

    /// `exp(tX).p`.
    pub fn exp_ray(&self, x: &DMatrix<f64>, t: f64, p: &Point) -> Result<Point> {
        let g = expm(&(x * t));
        self.act(&g, p)
    }

    /// Geodesic distance in the metric induced by `<,>` (round unit metric for the sphere).
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        if p.coords.shape() != q.coords.shape() || p.model != self.kind || q.model != self.kind {
            return Err(Error::Dimension("points of different models or shapes".into()));
        }
        let raw = match self.kind {
            ModelKind::Sl => {
                let l = cholesky_lower(&p.coords)?;
                let li = l
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
                let m = &li * &q.coords * li.transpose();
                let m = (&m + m.transpose()) * 0.5;
                let eig = m.symmetric_eigenvalues();
                if eig.iter().any(|&v| !(v > 0.0)) {
                    return Err(Error::Numeric(format!(
                        "p^-1 q has non-positive spectrum {:?}",
                        eig.as_slice()
                    )));
                }
                eig.iter().map(|v| v.ln().powi(2)).sum::<f64>().sqrt()
            }
            ModelKind::So1n => {
                let d = &p.coords - &q.coords;
                let chord = minkowski_dot(&d, &d).max(0.0).sqrt();
                2.0 * (chord / 2.0).asinh()
            }
            ModelKind::Hopf => {
                let chord = (&p.coords - &q.coords).norm();
                2.0 * (chord / 2.0).min(1.0).asin()
            }
        };
        Ok(raw * self.distance_scale())
    }

    /// A reproducible random point: `exp(X).o` for a random `X` in `p`
    /// (in the full algebra for the compact model) with coefficients in `[-scale, scale]`.
    pub fn random_point<R: Rng>(&self, rng: &mut R, scale: f64) -> Point {
        let gens = match self.kind {
            ModelKind::Hopf => self.basis.clone(),
            _ => self.p_basis(),
        };
        let mut x = DMatrix::zeros(self.matrix_size, self.matrix_size);
        for b in &gens {
            x += b.to_f64() * rng.gen_range(-scale..=scale);
        }
        let mut p = self.act_unchecked(&expm(&x), &self.origin);
        if self.kind == ModelKind::Hopf {
            let n = p.coords.norm();
            p.coords /= n;
        }
        p
    }

    /// A reproducible random element of the algebra as a float matrix.
    pub fn random_element<R: Rng>(&self, rng: &mut R, scale: f64) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.matrix_size, self.matrix_size);
        for b in &self.basis {
            x += b.to_f64() * rng.gen_range(-scale..=scale);
        }
        x
    }

    pub fn identity(&self) -> DMatrix<f64> {
        DMatrix::identity(self.matrix_size, self.matrix_size)
    }

    /// Checks `theta^2 = id` and `theta [X,Y] = [theta X, theta Y]` on all basis pairs.
    pub fn check_involution(&self) -> Result<()> {
        for (i, x) in self.basis.iter().enumerate() {
            if self.theta(&self.theta(x)) != *x {
                return Err(Error::Internal(format!("theta^2 != id on basis element {i}")));
            }
            for y in &self.basis {
                if self.theta(&x.bracket(y)?) != self.theta(x).bracket(&self.theta(y))? {
                    return Err(Error::Internal("theta is not an automorphism".into()));
                }
            }
        }
        Ok(())
    }

    /// Gram matrix of `<,>` on the model basis.
    pub fn gram(&self) -> Result<Vec<Vec<Q>>> {
        self.basis
            .iter()
            .map(|x| self.basis.iter().map(|y| self.inner(x, y)).collect())
            .collect()
    }
}

pub fn minkowski_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    -a[(0, 0)] * b[(0, 0)] + (1..a.nrows()).map(|i| a[(i, 0)] * b[(i, 0)]).sum::<f64>()
}
