//! Restricted root-space decomposition relative to a maximal abelian `a` in `p`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, format_rational, kernel, q, to_f64, QMatrix, Span, Q};
use crate::models::{MatrixModel, ModelKind};

/// A functional on `a`, stored by its values on the `a` basis.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Root(pub Vec<Q>);

impl Root {
    pub fn zero(rank: usize) -> Self {
        Root(vec![Q::zero(); rank])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn neg(&self) -> Root {
        Root(self.0.iter().map(|x| -x).collect())
    }

    pub fn add(&self, other: &Root) -> Root {
        Root(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn pair(&self, covector: &[Q]) -> Q {
        exact::dot(&self.0, covector)
    }

    /// `lambda(H)` for `H = sum_i c_i a_i`.
    pub fn eval(&self, a_coords: &[Q]) -> Q {
        exact::dot(&self.0, a_coords)
    }
}

impl fmt::Debug for Root {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(format_rational).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl Serialize for Root {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        exact::serialize_qvec(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for Root {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        exact::deserialize_qvec(d).map(Root)
    }
}

#[derive(Clone, Debug)]
pub struct RootSpaceDecomposition {
    model: String,
    a_basis: Vec<QMatrix>,
    root_spaces: BTreeMap<Root, Vec<QMatrix>>,
    zero_space: Vec<QMatrix>,
}

impl RootSpaceDecomposition {
    pub fn rank(&self) -> usize {
        self.a_basis.len()
    }

    pub fn a_basis(&self) -> &[QMatrix] {
        &self.a_basis
    }

    /// Restricted roots in a fixed (lexicographic) order.
    pub fn roots(&self) -> Vec<Root> {
        self.root_spaces.keys().cloned().collect()
    }

    pub fn root_space(&self, root: &Root) -> Option<&[QMatrix]> {
        self.root_spaces.get(root).map(Vec::as_slice)
    }

    pub fn multiplicity(&self, root: &Root) -> usize {
        self.root_spaces.get(root).map_or(0, Vec::len)
    }

    pub fn zero_space(&self) -> &[QMatrix] {
        &self.zero_space
    }

    pub fn is_root(&self, root: &Root) -> bool {
        self.root_spaces.contains_key(root)
    }

    pub fn model_name(&self) -> &str {
        &self.model
    }

    /// `g_lambda` for a root or zero, the empty slice otherwise.
    pub fn space(&self, weight: &Root) -> &[QMatrix] {
        if weight.is_zero() {
            &self.zero_space
        } else {
            self.root_space(weight).unwrap_or(&[])
        }
    }

    /// Coordinates of `h` in the `a` basis.
    pub fn a_coords(&self, h: &QMatrix) -> Option<Vec<Q>> {
        Span::from_matrices(&self.a_basis).coords(h.flat())
    }

    /// Checks every structural invariant exactly.
    pub fn verify(&self, model: &MatrixModel) -> Result<()> {
        let total: usize =
            self.zero_space.len() + self.root_spaces.values().map(Vec::len).sum::<usize>();
        if total != model.ambient_dim() {
            return Err(Error::Internal(format!(
                "dimension count {total} != dim g = {}",
                model.ambient_dim()
            )));
        }
        for (root, space) in self.root_spaces.iter().chain([(&Root::zero(self.rank()), &self.zero_space)]) {
            for x in space {
                for (k, h) in self.a_basis.iter().enumerate() {
                    if h.bracket(x)? != x.scale(&root.0[k]) {
                        return Err(Error::Internal(format!("[H_{k}, X] != lambda(H_{k}) X for {root:?}")));
                    }
                }
            }
            let neg = root.neg();
            let theta_span = Span::from_matrices(self.space(&neg));
            for x in space {
                if !theta_span.contains(model.theta(x).flat()) {
                    return Err(Error::Internal(format!("theta(g_{root:?}) not in g_{neg:?}")));
                }
            }
        }
        for r in self.root_spaces.keys() {
            if !self.is_root(&r.neg()) {
                return Err(Error::Internal(format!("-{r:?} is not a root")));
            }
        }
        let weights: Vec<Root> =
            std::iter::once(Root::zero(self.rank())).chain(self.root_spaces.keys().cloned()).collect();
        for l in &weights {
            for m in &weights {
                let target = l.add(m);
                let span = Span::from_matrices(self.space(&target));
                for x in self.space(l) {
                    for y in self.space(m) {
                        let b = x.bracket(y)?;
                        let ok = if span.rank() == 0 { b.is_zero() } else { span.contains(b.flat()) };
                        if !ok {
                            return Err(Error::Internal(format!(
                                "[g_{l:?}, g_{m:?}] escapes g_{target:?}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn export(&self) -> DecompositionExport {
        DecompositionExport {
            model: self.model.clone(),
            rank: self.rank(),
            a_basis: self.a_basis.clone(),
            zero_space: self.zero_space.clone(),
            roots: self
                .root_spaces
                .iter()
                .map(|(r, b)| RootSpaceExport {
                    root: r.clone(),
                    multiplicity: b.len(),
                    basis: b.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RootSpaceExport {
    pub root: Root,
    pub multiplicity: usize,
    pub basis: Vec<QMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionExport {
    pub model: String,
    pub rank: usize,
    pub a_basis: Vec<QMatrix>,
    pub zero_space: Vec<QMatrix>,
    pub roots: Vec<RootSpaceExport>,
}

/// Canonical maximal abelian subspace of `p`, verified abelian and maximal.
///
/// `sl(n)`: `E_kk - E_nn` for `k < n`. `so(1,n)`: the boost in the first coordinate.
pub fn maximal_abelian(model: &MatrixModel) -> Result<Vec<QMatrix>> {
    let n = model.n();
    let a = match model.kind() {
        ModelKind::Sl => (0..n - 1)
            .map(|k| {
                let mut h = QMatrix::zeros(n, n);
                h.set(k, k, q(1));
                h.set(n - 1, n - 1, q(-1));
                h
            })
            .collect::<Vec<_>>(),
        ModelKind::So1n => vec![model.basis()[0].clone()],
        ModelKind::Hopf => {
            return Err(Error::UnsupportedModel(
                "the compact unitary model has no restricted root theory (p = 0)".into(),
            ))
        }
    };
    let p = model.p_basis();
    let p_span = Span::from_matrices(&p);
    for h in &a {
        if !p_span.contains(h.flat()) {
            return Err(Error::Internal("canonical a is not inside p".into()));
        }
        for h2 in &a {
            if !h.bracket(h2)?.is_zero() {
                return Err(Error::Internal("canonical a is not abelian".into()));
            }
        }
    }
    if centralizer_in_p_dim(&a, &p)? != a.len() {
        return Err(Error::Internal("canonical a is not maximal abelian".into()));
    }
    Ok(a)
}

/// Dimension of `{X in p : [H, X] = 0 for all H in a}`, by an exact kernel computation.
pub fn centralizer_in_p_dim(a: &[QMatrix], p: &[QMatrix]) -> Result<usize> {
    if p.is_empty() {
        return Ok(0);
    }
    let dim = p[0].flat().len();
    // columns: [H_k, p_j] flattened; stack the rows of all k
    let mut rows = Vec::new();
    for h in a {
        let images: Vec<QMatrix> = p.iter().map(|x| h.bracket(x)).collect::<Result<_>>()?;
        for e in 0..dim {
            rows.push(images.iter().map(|m| m.flat()[e].clone()).collect::<Vec<Q>>());
        }
    }
    Ok(kernel(&rows, p.len()).len())
}

/// Closest rational with denominator at most 64, if within 1e-9.
fn rationalize(x: f64) -> Option<Q> {
    (1..=64i64).find_map(|d| {
        let n = (x * d as f64).round();
        ((x - n / d as f64).abs() < 1e-9).then(|| exact::qf(n as i64, d))
    })
}

/// Simultaneous eigenspace decomposition of `ad(H_1), ..., ad(H_r)` over the rationals.
///
/// Eigenvalue candidates come from a floating-point Schur step; every
/// candidate is then certified by an exact kernel computation, and the
/// eigenspaces must fill the space exactly.
pub fn decompose(model: &MatrixModel, a_basis: &[QMatrix]) -> Result<RootSpaceDecomposition> {
    let p_span = Span::from_matrices(&model.p_basis());
    for h in a_basis {
        if !p_span.contains(h.flat()) {
            return Err(Error::Argument("a basis element is not in p".into()));
        }
        for h2 in a_basis {
            if !h.bracket(h2)?.is_zero() {
                return Err(Error::Argument("a basis is not abelian".into()));
            }
        }
    }
    if Span::from_matrices(a_basis).rank() != a_basis.len() {
        return Err(Error::Argument("a basis is linearly dependent".into()));
    }
    let d = model.ambient_dim();
    let ads: Vec<Vec<Vec<Q>>> = a_basis.iter().map(|h| model.ad_matrix(h)).collect::<Result<_>>()?;
    let gram = model.gram()?;
    let gram = DMatrix::from_fn(d, d, |i, j| to_f64(&gram[i][j]));

    let identity: Vec<Vec<Q>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
        .collect();
    let mut pieces: Vec<(Vec<Q>, Vec<Vec<Q>>)> = vec![(Vec::new(), identity)];
    for ad in &ads {
        let mut next = Vec::new();
        for (prefix, w) in pieces {
            for (lambda, sub) in split_eigenspaces(ad, &w, &gram)? {
                let mut p = prefix.clone();
                p.push(lambda);
                next.push((p, sub));
            }
        }
        pieces = next;
    }

    let mut root_spaces = BTreeMap::new();
    let mut zero_space = Vec::new();
    for (weights, vecs) in pieces {
        let mats: Vec<QMatrix> = vecs.iter().map(|c| model.from_coords(c)).collect();
        let root = Root(weights);
        if root.is_zero() {
            zero_space = mats;
        } else {
            root_spaces.insert(root, mats);
        }
    }
    Ok(RootSpaceDecomposition {
        model: model.name(),
        a_basis: a_basis.to_vec(),
        root_spaces,
        zero_space,
    })
}

fn mat_vec(a: &[Vec<Q>], v: &[Q]) -> Vec<Q> {
    a.iter().map(|row| exact::dot(row, v)).collect()
}

/// Splits the invariant subspace spanned by `w` into eigenspaces of `ad`.
///
/// `ad(H)` for `H` in `p` is self-adjoint for `<,>`, so the candidates come
/// from the symmetric problem `L^-1 (G_W R) L^-T` with `G_W = L L^T`.
fn split_eigenspaces(ad: &[Vec<Q>], w: &[Vec<Q>], gram: &DMatrix<f64>) -> Result<Vec<(Q, Vec<Vec<Q>>)>> {
    let k = w.len();
    let dim = ad.len();
    let span = Span::from_vectors(dim, w.iter().map(Vec::as_slice));
    // restricted operator in the coordinates of w
    let mut restricted = DMatrix::<f64>::zeros(k, k);
    for (j, v) in w.iter().enumerate() {
        let image = mat_vec(ad, v);
        let c = span
            .coords(&image)
            .ok_or_else(|| Error::Internal("subspace is not ad-invariant".into()))?;
        for i in 0..k {
            restricted[(i, j)] = to_f64(&c[i]);
        }
    }
    let wf = DMatrix::from_fn(dim, k, |i, j| to_f64(&w[j][i]));
    let gw = wf.transpose() * gram * &wf;
    let l = crate::linalg::cholesky_lower(&gw)?;
    let li = l
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular Gram matrix".into()))?;
    let sym = &li * (&gw * &restricted) * li.transpose();
    let asym = crate::linalg::max_abs(&(&sym - sym.transpose()));
    if asym > 1e-8 * crate::linalg::max_abs(&sym).max(1.0) {
        return Err(Error::UnsupportedModel("ad(H) is not self-adjoint for <,>".into()));
    }
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut candidates: Vec<Q> = Vec::new();
    for ev in sym.symmetric_eigenvalues().iter() {
        let r = rationalize(*ev)
            .ok_or_else(|| Error::UnsupportedModel(format!("irrational eigenvalue {ev}")))?;
        if !candidates.contains(&r) {
            candidates.push(r);
        }
    }
    candidates.sort();
    let mut out = Vec::new();
    let mut found = 0;
    for lambda in candidates {
        // (ad - lambda) W c = 0
        let cols: Vec<Vec<Q>> = w
            .iter()
            .map(|v| {
                let mut img = mat_vec(ad, v);
                for (x, vi) in img.iter_mut().zip(v) {
                    *x -= &lambda * vi;
                }
                img
            })
            .collect();
        let rows: Vec<Vec<Q>> = (0..dim).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
        let ker = kernel(&rows, k);
        if ker.is_empty() {
            return Err(Error::UnsupportedModel(format!(
                "eigenvalue candidate {} is not exact",
                format_rational(&lambda)
            )));
        }
        found += ker.len();
        let vecs: Vec<Vec<Q>> = ker
            .iter()
            .map(|c| {
                let mut v = vec![Q::zero(); dim];
                for (ci, wi) in c.iter().zip(w) {
                    if !ci.is_zero() {
                        for (x, y) in v.iter_mut().zip(wi) {
                            *x += ci * y;
                        }
                    }
                }
                v
            })
            .collect();
        out.push((lambda, vecs));
    }
    if found != k {
        return Err(Error::UnsupportedModel(
            "ad(H) is not diagonalizable over the rationals on this model".into(),
        ));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PositiveSystem {
    pub positive_roots: Vec<Root>,
    /// Simple roots ordered along the Dynkin diagram.
    pub simple_roots: Vec<Root>,
    #[serde(serialize_with = "exact::serialize_qvec", deserialize_with = "exact::deserialize_qvec")]
    pub regular_functional: Vec<Q>,
}

impl PositiveSystem {
    pub fn rank(&self) -> usize {
        self.simple_roots.len()
    }

    pub fn is_positive(&self, r: &Root) -> bool {
        self.positive_roots.contains(r)
    }

    /// Coordinates of a functional over the simple roots.
    pub fn simple_coords(&self, r: &Root) -> Option<Vec<Q>> {
        let rank = self.rank();
        Span::from_vectors(rank, self.simple_roots.iter().map(|s| s.0.as_slice())).coords(&r.0)
    }

    /// Checks the defining properties exactly.
    pub fn verify(&self, dec: &RootSpaceDecomposition) -> Result<()> {
        let roots = dec.roots();
        for r in &roots {
            let pos = self.is_positive(r);
            let neg = self.is_positive(&r.neg());
            if pos == neg {
                return Err(Error::Internal(format!("{r:?} is not split by the positive system")));
            }
        }
        if self.simple_roots.len() != dec.rank() {
            return Err(Error::Internal("number of simple roots != rank".into()));
        }
        for b in &self.positive_roots {
            let c = self
                .simple_coords(b)
                .ok_or_else(|| Error::Internal(format!("{b:?} not in the span of the simple roots")))?;
            if c.iter().any(|x| x.is_negative() || !x.is_integer()) {
                return Err(Error::Internal(format!(
                    "{b:?} is not a nonnegative integer combination of simple roots"
                )));
            }
        }
        Ok(())
    }
}

/// Positive system cut out by the covector `(N^{r-1}, ..., N, 1)` with
/// `N = 1 + max |root coordinate|`; `N` is incremented if that covector
/// vanishes on some root.
pub fn positive_system(dec: &RootSpaceDecomposition) -> Result<PositiveSystem> {
    let roots = dec.roots();
    let r = dec.rank();
    let max = roots
        .iter()
        .map(|x| exact::max_abs(&x.0))
        .fold(Q::zero(), |a, b| if b > a { b } else { a });
    let mut base = max.ceil() + Q::one();
    for _ in 0..64 {
        let f: Vec<Q> = (0..r)
            .map(|i| {
                let mut p = Q::one();
                for _ in 0..(r - 1 - i) {
                    p *= &base;
                }
                p
            })
            .collect();
        if roots.iter().all(|x| !x.pair(&f).is_zero()) {
            return Ok(build_positive_system(&roots, f));
        }
        base += Q::one();
    }
    Err(Error::Internal("no regular functional found".into()))
}

fn build_positive_system(roots: &[Root], f: Vec<Q>) -> PositiveSystem {
    let positive: Vec<Root> = roots.iter().filter(|x| x.pair(&f).is_positive()).cloned().collect();
    let simple: Vec<Root> = positive
        .iter()
        .filter(|x| {
            !positive
                .iter()
                .any(|a| positive.iter().any(|b| &a.add(b) == *x))
        })
        .cloned()
        .collect();
    let ordered = dynkin_order(&simple, roots, &f);
    PositiveSystem {
        positive_roots: positive,
        simple_roots: ordered,
        regular_functional: f,
    }
}

/// Orders simple roots by walking the Dynkin diagram, starting at the end node
/// with the smallest functional value. Two simple roots are adjacent when
/// their sum is a root.
fn dynkin_order(simple: &[Root], roots: &[Root], f: &[Q]) -> Vec<Root> {
    let n = simple.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut v: Vec<usize> = (0..n)
                .filter(|&j| j != i && roots.contains(&simple[i].add(&simple[j])))
                .collect();
            v.sort_by(|&a, &b| simple[a].pair(f).cmp(&simple[b].pair(f)));
            v
        })
        .collect();
    let mut order = Vec::new();
    let mut seen = vec![false; n];
    while order.len() < n {
        let start = (0..n)
            .filter(|&i| !seen[i])
            .min_by(|&a, &b| {
                let leaf_a = adj[a].len() <= 1;
                let leaf_b = adj[b].len() <= 1;
                leaf_b.cmp(&leaf_a).then(simple[a].pair(f).cmp(&simple[b].pair(f)))
            })
            .expect("unvisited node exists");
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            if seen[i] {
                continue;
            }
            seen[i] = true;
            order.push(i);
            for &j in adj[i].iter().rev() {
                if !seen[j] {
                    stack.push(j);
                }
            }
        }
    }
    order.into_iter().map(|i| simple[i].clone()).collect()
}

/// A subset of the simple roots, as sorted zero-based indices into `Λ`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Phi(Vec<usize>);

impl Phi {
    pub fn new(mut idx: Vec<usize>) -> Self {
        idx.sort_unstable();
        idx.dedup();
        Phi(idx)
    }

    pub fn empty() -> Self {
        Phi(Vec::new())
    }

    /// From one-based indices as used on the command line.
    pub fn from_one_based(idx: &[usize]) -> Result<Self> {
        if idx.iter().any(|&i| i == 0) {
            return Err(Error::config("phi", "simple-root indices start at 1"));
        }
        Ok(Phi::new(idx.iter().map(|i| i - 1).collect()))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset(&self, other: &Phi) -> bool {
        self.0.iter().all(|i| other.0.contains(i))
    }

    /// Stable label such as `empty` or `1-3`.
    pub fn label(&self) -> String {
        if self.0.is_empty() {
            "empty".into()
        } else {
            self.one_based().iter().map(usize::to_string).collect::<Vec<_>>().join("-")
        }
    }

    /// All proper subsets of a rank-`r` simple system, in size-then-lexicographic order.
    pub fn proper_subsets(rank: usize) -> Vec<Phi> {
        let mut all: Vec<Phi> = (0u32..(1u32 << rank) - 1)
            .map(|mask| Phi((0..rank).filter(|i| mask & (1 << i) != 0).collect()))
            .collect();
        all.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then(a.0.cmp(&b.0)));
        all
    }
}

impl fmt::Display for Phi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|i| format!("a{i}")).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootSubsystem {
    pub roots: Vec<Root>,
    pub positive: Vec<Root>,
}

/// `Σ_Φ = Σ ∩ span(Φ)` and its positive part.
pub fn root_subsystem(ps: &PositiveSystem, dec: &RootSpaceDecomposition, phi: &Phi) -> Result<RootSubsystem> {
    if let Some(&bad) = phi.indices().iter().find(|&&i| i >= ps.rank()) {
        return Err(Error::Argument(format!(
            "simple-root index {} exceeds rank {}",
            bad + 1,
            ps.rank()
        )));
    }
    let span = Span::from_vectors(
        dec.rank(),
        phi.indices().iter().map(|&i| ps.simple_roots[i].0.as_slice()),
    );
    let roots: Vec<Root> = if phi.is_empty() {
        Vec::new()
    } else {
        dec.roots().into_iter().filter(|r| span.contains(&r.0)).collect()
    };
    let positive = roots.iter().filter(|r| ps.is_positive(r)).cloned().collect();
    Ok(RootSubsystem { roots, positive })
}

/// Heights of positive roots over the simple system.
pub fn height(ps: &PositiveSystem, r: &Root) -> Option<i64> {
    ps.simple_coords(r)
        .map(|c| c.iter().fold(Q::zero(), |a, b| a + b))
        .and_then(|h| h.to_integer().to_i64())
}
