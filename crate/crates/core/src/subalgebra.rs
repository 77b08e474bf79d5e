//! Subalgebras built from root data, and exact ideal/containment decisions.
//!
//! All membership questions are answered by exact row reduction; there is
//! no tolerance anywhere in this module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, kernel, QMatrix, Span, Q};
use crate::models::MatrixModel;
use crate::rootspace::{height, root_subsystem, Phi, PositiveSystem, Root, RootSpaceDecomposition};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    A,
    N,
    S,
    /// `s ⊖ V` for the given spanning set of `V ⊆ a`.
    SV(Vec<QMatrix>),
    QPhi(Phi),
    MPhi(Phi),
    APhi(Phi),
    NPhi(Phi),
    SPhi(Phi),
    Custom(String),
}

impl Recipe {
    pub fn phi(&self) -> Option<&Phi> {
        match self {
            Recipe::QPhi(p) | Recipe::MPhi(p) | Recipe::APhi(p) | Recipe::NPhi(p) | Recipe::SPhi(p) => Some(p),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Recipe::A => "a".into(),
            Recipe::N => "n".into(),
            Recipe::S => "s".into(),
            Recipe::SV(v) => format!("s_V(dim V<={})", v.len()),
            Recipe::QPhi(p) => format!("q_Phi{p}"),
            Recipe::MPhi(p) => format!("m_Phi{p}"),
            Recipe::APhi(p) => format!("a_Phi{p}"),
            Recipe::NPhi(p) => format!("n_Phi{p}"),
            Recipe::SPhi(p) => format!("s_Phi{p}"),
            Recipe::Custom(s) => s.clone(),
        }
    }
}

/// A linearly independent exact basis of a subspace of `g`, with its recipe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subalgebra {
    pub recipe: Recipe,
    pub parent_model: String,
    pub basis: Vec<QMatrix>,
}

impl Subalgebra {
    /// Keeps the independent elements of `spanning` (in order).
    pub fn from_spanning(model: &MatrixModel, recipe: Recipe, spanning: Vec<QMatrix>) -> Result<Self> {
        for x in &spanning {
            if !model.contains(x) {
                return Err(Error::Argument(format!(
                    "{} element is not in {}",
                    recipe.label(),
                    model.name()
                )));
            }
        }
        let basis = if spanning.is_empty() {
            spanning
        } else {
            let span = Span::from_matrices(&spanning);
            span.independent_generators().iter().map(|&i| spanning[i].clone()).collect()
        };
        Ok(Subalgebra {
            recipe,
            parent_model: model.name(),
            basis,
        })
    }

    /// Validates an imported descriptor against the model: membership,
    /// independence and bracket closure.
    pub fn import(model: &MatrixModel, json: &str) -> Result<Self> {
        let sub: Subalgebra =
            serde_json::from_str(json).map_err(|e| Error::Argument(format!("bad subalgebra descriptor: {e}")))?;
        if sub.parent_model != model.name() {
            return Err(Error::Argument(format!(
                "descriptor is for {}, not {}",
                sub.parent_model,
                model.name()
            )));
        }
        if sub.basis.iter().any(|x| !model.contains(x)) {
            return Err(Error::Argument("descriptor basis is not in the algebra".into()));
        }
        if !sub.basis.is_empty() && sub.span().rank() != sub.dim() {
            return Err(Error::Argument("descriptor basis is linearly dependent".into()));
        }
        if let Some((i, j)) = sub.closure_failure()? {
            return Err(Error::Argument(format!("descriptor is not closed: [b{i}, b{j}] escapes")));
        }
        Ok(sub)
    }

    pub fn export(&self) -> String {
        serde_json::to_string_pretty(self).expect("subalgebra serializes")
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn vec_dim(&self) -> usize {
        self.basis.first().map_or(0, |b| b.flat().len())
    }

    pub fn span(&self) -> Span {
        Span::from_matrices(&self.basis)
    }

    pub fn contains(&self, x: &QMatrix) -> bool {
        if self.basis.is_empty() {
            return x.is_zero();
        }
        self.span().contains(x.flat())
    }

    /// `span(self) ⊆ span(other)`.
    pub fn is_subspace_of(&self, other: &Subalgebra) -> bool {
        if self.basis.is_empty() {
            return true;
        }
        let span = other.span();
        if other.basis.is_empty() {
            return self.basis.iter().all(QMatrix::is_zero);
        }
        self.basis.iter().all(|x| span.contains(x.flat()))
    }

    pub fn same_span(&self, other: &Subalgebra) -> bool {
        self.dim() == other.dim() && self.is_subspace_of(other)
    }

    /// First basis pair whose bracket leaves the span, if any.
    pub fn closure_failure(&self) -> Result<Option<(usize, usize)>> {
        let span = self.span();
        for (i, x) in self.basis.iter().enumerate() {
            for (j, y) in self.basis.iter().enumerate().skip(i + 1) {
                if !span.contains(x.bracket(y)?.flat()) {
                    return Ok(Some((i, j)));
                }
            }
        }
        Ok(None)
    }

    pub fn is_closed(&self) -> Result<bool> {
        Ok(self.closure_failure()?.is_none())
    }

    /// Coordinates of `x` in this basis.
    pub fn coords(&self, x: &QMatrix) -> Option<Vec<Q>> {
        if self.basis.is_empty() {
            return x.is_zero().then(Vec::new);
        }
        self.span().coords(x.flat())
    }

    /// Structure constants `c[i][j][k]` with `[b_i, b_j] = Σ_k c[i][j][k] b_k`.
    pub fn structure_constants(&self) -> Result<Vec<Vec<Vec<Q>>>> {
        let span = self.span();
        self.basis
            .iter()
            .map(|x| {
                self.basis
                    .iter()
                    .map(|y| {
                        span.coords(x.bracket(y)?.flat())
                            .ok_or_else(|| Error::Argument(format!("{} is not closed", self.recipe.label())))
                    })
                    .collect()
            })
            .collect()
    }

    fn bracket_span(&self, a: &[QMatrix], b: &[QMatrix]) -> Result<Vec<QMatrix>> {
        let mut out = Vec::new();
        for x in a {
            for y in b {
                out.push(x.bracket(y)?);
            }
        }
        let span = Span::from_vectors(self.vec_dim(), out.iter().map(QMatrix::flat));
        Ok(span.independent_generators().iter().map(|&i| out[i].clone()).collect())
    }

    /// `[self, self]` as a subalgebra.
    pub fn derived(&self) -> Result<Subalgebra> {
        Ok(Subalgebra {
            recipe: Recipe::Custom(format!("[{0},{0}]", self.recipe.label())),
            parent_model: self.parent_model.clone(),
            basis: self.bracket_span(&self.basis, &self.basis)?,
        })
    }

    /// Dimensions along the derived series until it stabilizes.
    pub fn derived_series_dims(&self) -> Result<Vec<usize>> {
        let mut dims = vec![self.dim()];
        let mut cur = self.basis.clone();
        while !cur.is_empty() {
            let next = self.bracket_span(&cur, &cur)?;
            if next.len() == cur.len() {
                break;
            }
            dims.push(next.len());
            cur = next;
        }
        Ok(dims)
    }

    /// Dimensions along the lower central series until it stabilizes.
    pub fn lower_central_series_dims(&self) -> Result<Vec<usize>> {
        let mut dims = vec![self.dim()];
        let mut cur = self.basis.clone();
        while !cur.is_empty() {
            let next = self.bracket_span(&self.basis, &cur)?;
            if next.len() == cur.len() {
                break;
            }
            dims.push(next.len());
            cur = next;
        }
        Ok(dims)
    }

    pub fn is_solvable(&self) -> Result<bool> {
        Ok(self.derived_series_dims()?.last() == Some(&0))
    }

    pub fn is_nilpotent(&self) -> Result<bool> {
        Ok(self.lower_central_series_dims()?.last() == Some(&0))
    }

    pub fn is_abelian(&self) -> Result<bool> {
        for x in &self.basis {
            for y in &self.basis {
                if !x.bracket(y)?.is_zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Positive roots sorted by height, then lexicographically.
fn positive_by_height(ps: &PositiveSystem) -> Vec<Root> {
    let mut roots = ps.positive_roots.clone();
    roots.sort_by(|a, b| height(ps, a).cmp(&height(ps, b)).then(a.cmp(b)));
    roots
}

fn root_space_sum(dec: &RootSpaceDecomposition, roots: &[Root]) -> Vec<QMatrix> {
    roots.iter().flat_map(|r| dec.space(r).iter().cloned()).collect()
}

/// `(n, s)` with `n = ⊕_{Σ⁺} g_λ` and `s = a ⊕ n`.
pub fn build_iwasawa(
    model: &MatrixModel,
    dec: &RootSpaceDecomposition,
    ps: &PositiveSystem,
) -> Result<(Subalgebra, Subalgebra)> {
    let n_basis = root_space_sum(dec, &positive_by_height(ps));
    let n = Subalgebra::from_spanning(model, Recipe::N, n_basis.clone())?;
    let mut s_basis = dec.a_basis().to_vec();
    s_basis.extend(n_basis);
    let s = Subalgebra::from_spanning(model, Recipe::S, s_basis)?;
    Ok((n, s))
}

pub fn build_a(model: &MatrixModel, dec: &RootSpaceDecomposition) -> Result<Subalgebra> {
    Subalgebra::from_spanning(model, Recipe::A, dec.a_basis().to_vec())
}

/// Orthogonal complement of `removed` inside `span(within)` with respect to `<,>`.
fn orthogonal_complement(model: &MatrixModel, within: &[QMatrix], removed: &[QMatrix]) -> Result<Vec<QMatrix>> {
    if removed.is_empty() {
        return Ok(within.to_vec());
    }
    let rows: Vec<Vec<Q>> = removed
        .iter()
        .map(|v| within.iter().map(|w| model.inner(w, v)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok(kernel(&rows, within.len())
        .iter()
        .map(|c| QMatrix::combination(c, within))
        .collect())
}

/// `s_V = (a ⊖ V) ⊕ n` for `V` given by a spanning set inside `a`.
pub fn build_s_v(
    model: &MatrixModel,
    dec: &RootSpaceDecomposition,
    n: &Subalgebra,
    v: &[QMatrix],
) -> Result<Subalgebra> {
    let a_span = Span::from_matrices(dec.a_basis());
    for x in v {
        if x.shape() != dec.a_basis()[0].shape() || !a_span.contains(x.flat()) {
            return Err(Error::Argument("V is not contained in a".into()));
        }
    }
    let mut basis = orthogonal_complement(model, dec.a_basis(), v)?;
    basis.extend(n.basis.iter().cloned());
    Subalgebra::from_spanning(model, Recipe::SV(v.to_vec()), basis)
}

fn require_proper(ps: &PositiveSystem, phi: &Phi) -> Result<()> {
    if let Some(&bad) = phi.indices().iter().find(|&&i| i >= ps.rank()) {
        return Err(Error::Argument(format!(
            "simple-root index {} exceeds rank {}",
            bad + 1,
            ps.rank()
        )));
    }
    if phi.len() == ps.rank() {
        return Err(Error::Argument(
            "Phi must be a proper subset of the simple roots".into(),
        ));
    }
    Ok(())
}

/// `q_Φ = g_0 ⊕ ⊕_{Σ_Φ ∪ Σ⁺} g_β`.
pub fn build_parabolic(
    model: &MatrixModel,
    dec: &RootSpaceDecomposition,
    ps: &PositiveSystem,
    phi: &Phi,
) -> Result<Subalgebra> {
    require_proper(ps, phi)?;
    let sub = root_subsystem(ps, dec, phi)?;
    let mut basis = dec.zero_space().to_vec();
    basis.extend(root_space_sum(dec, &positive_by_height(ps)));
    let negatives: Vec<Root> = sub.roots.iter().filter(|r| !ps.is_positive(r)).cloned().collect();
    basis.extend(root_space_sum(dec, &negatives));
    Subalgebra::from_spanning(model, Recipe::QPhi(phi.clone()), basis)
}

#[derive(Clone, Debug)]
pub struct Langlands {
    pub m: Subalgebra,
    pub a: Subalgebra,
    pub n: Subalgebra,
}

/// `q_Φ = m_Φ ⊕ a_Φ ⊕ n_Φ`.
///
/// `a_Φ` is the common kernel of `Φ` in `a`, `n_Φ` the sum of the positive
/// root spaces outside `Σ_Φ`, and `m_Φ = (g_0 ⊖ a_Φ) ⊕ ⊕_{β ∈ Σ_Φ} g_β`.
pub fn langlands(
    model: &MatrixModel,
    dec: &RootSpaceDecomposition,
    ps: &PositiveSystem,
    phi: &Phi,
) -> Result<Langlands> {
    require_proper(ps, phi)?;
    let sub = root_subsystem(ps, dec, phi)?;
    let a_phi = a_phi_basis(dec, ps, phi);
    let mut m_basis = orthogonal_complement(model, dec.zero_space(), &a_phi)?;
    let mut sigma_phi = sub.roots.clone();
    sigma_phi.sort_by(|a, b| {
        ps.is_positive(b)
            .cmp(&ps.is_positive(a))
            .then(height(ps, a).map(i64::abs).cmp(&height(ps, b).map(i64::abs)))
            .then(a.cmp(b))
    });
    m_basis.extend(root_space_sum(dec, &sigma_phi));
    let n_roots: Vec<Root> = positive_by_height(ps)
        .into_iter()
        .filter(|r| !sub.positive.contains(r))
        .collect();
    Ok(Langlands {
        m: Subalgebra::from_spanning(model, Recipe::MPhi(phi.clone()), m_basis)?,
        a: Subalgebra::from_spanning(model, Recipe::APhi(phi.clone()), a_phi)?,
        n: Subalgebra::from_spanning(model, Recipe::NPhi(phi.clone()), root_space_sum(dec, &n_roots))?,
    })
}

fn a_phi_basis(dec: &RootSpaceDecomposition, ps: &PositiveSystem, phi: &Phi) -> Vec<QMatrix> {
    let rows: Vec<Vec<Q>> = phi.indices().iter().map(|&i| ps.simple_roots[i].0.clone()).collect();
    if rows.is_empty() {
        return dec.a_basis().to_vec();
    }
    kernel(&rows, dec.rank())
        .iter()
        .map(|c| QMatrix::combination(c, dec.a_basis()))
        .collect()
}

/// `s_Φ = a_Φ ⊕ n_Φ`.
pub fn build_s_phi(
    model: &MatrixModel,
    dec: &RootSpaceDecomposition,
    ps: &PositiveSystem,
    phi: &Phi,
) -> Result<Subalgebra> {
    let l = langlands(model, dec, ps, phi)?;
    let mut basis = l.a.basis;
    basis.extend(l.n.basis);
    Subalgebra::from_spanning(model, Recipe::SPhi(phi.clone()), basis)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdealWitness {
    /// Index into the ambient algebra's basis.
    pub ambient_index: usize,
    /// Index into the candidate ideal's basis.
    pub ideal_index: usize,
    pub bracket: QMatrix,
    /// Component of the bracket orthogonal to the candidate ideal under `<,>`.
    pub residual: QMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdealVerdict {
    pub is_ideal: bool,
    pub pairs_checked: usize,
    pub witness: Option<IdealWitness>,
}

/// Decides `[g, h] ⊆ h` exactly, scanning basis pairs in order.
pub fn is_ideal(model: &MatrixModel, h: &Subalgebra, g: &Subalgebra) -> Result<IdealVerdict> {
    if !h.is_subspace_of(g) {
        return Err(Error::Argument(format!(
            "not a subspace: {} is not contained in {}",
            h.recipe.label(),
            g.recipe.label()
        )));
    }
    for sub in [h, g] {
        if let Some((i, j)) = sub.closure_failure()? {
            return Err(Error::Argument(format!(
                "not closed: {} fails on basis pair ({i}, {j})",
                sub.recipe.label()
            )));
        }
    }
    let span = h.span();
    let mut pairs = 0;
    for (i, x) in g.basis.iter().enumerate() {
        for (j, y) in h.basis.iter().enumerate() {
            pairs += 1;
            let b = x.bracket(y)?;
            let inside = if h.basis.is_empty() { b.is_zero() } else { span.contains(b.flat()) };
            if !inside {
                let residual = orthogonal_residual(model, &b, &h.basis)?;
                return Ok(IdealVerdict {
                    is_ideal: false,
                    pairs_checked: pairs,
                    witness: Some(IdealWitness {
                        ambient_index: i,
                        ideal_index: j,
                        bracket: b,
                        residual,
                    }),
                });
            }
        }
    }
    Ok(IdealVerdict {
        is_ideal: true,
        pairs_checked: pairs,
        witness: None,
    })
}

fn orthogonal_residual(model: &MatrixModel, v: &QMatrix, basis: &[QMatrix]) -> Result<QMatrix> {
    if basis.is_empty() {
        return Ok(v.clone());
    }
    let gram: Vec<Vec<Q>> = basis
        .iter()
        .map(|a| basis.iter().map(|b| model.inner(a, b)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let rhs: Vec<Q> = basis.iter().map(|a| model.inner(v, a)).collect::<Result<_>>()?;
    let c = exact::solve(&gram, &rhs)?;
    Ok(v - &QMatrix::combination(&c, basis))
}

/// `[s_Φ, q_Φ] ⊆ s_Φ` for a solvable part and parabolic built from the same `Φ`.
pub fn check_solvable_part_ideal(model: &MatrixModel, s_phi: &Subalgebra, q_phi: &Subalgebra) -> Result<IdealVerdict> {
    match (&s_phi.recipe, &q_phi.recipe) {
        (Recipe::SPhi(a), Recipe::QPhi(b)) if a == b => is_ideal(model, s_phi, q_phi),
        (a, b) => Err(Error::Argument(format!(
            "expected s_Phi and q_Phi for the same Phi, got {} and {}",
            a.label(),
            b.label()
        ))),
    }
}

/// `u(n+1)` and its one-dimensional center, for the compact unitary model.
pub fn unitary_and_center(model: &MatrixModel) -> Result<(Subalgebra, Subalgebra)> {
    if !model.kind().is_compact() {
        return Err(Error::UnsupportedModel(format!("{} is not the unitary model", model.name())));
    }
    let k = model.n() + 1;
    let full = Subalgebra::from_spanning(model, Recipe::Custom(format!("u({k})")), model.basis().to_vec())?;
    // the first k basis elements are i E_jj; their sum is i I
    let ones: Vec<Q> = (0..model.ambient_dim()).map(|i| if i < k { exact::q(1) } else { exact::q(0) }).collect();
    let center = Subalgebra::from_spanning(model, Recipe::Custom("u(1)".into()), vec![model.from_coords(&ones)])?;
    Ok((full, center))
}
