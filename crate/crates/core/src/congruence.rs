//! Congruence certificates for orbits of an ideal.
//!
//! Given `s'` an ideal of the transitive `s` and points `p, q`, the element
//! `g ∈ S` with `g.q = p` normalizes `S'`, so `g` carries `S'.q` onto `S'.p`.
//! This module builds `g`, measures how far `Ad(g)` moves `s'`, and checks
//! sampled orbit points numerically.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, expm, flatten, halton, subspace_gap};
use crate::models::{MatrixModel, ModelKind, Point};
use crate::optimize::{least_squares, nelder_mead, NelderMeadOptions};
use crate::parallel::Execution;
use crate::subalgebra::{is_ideal, Subalgebra};
use crate::Verdict;

/// An ideal whose hypothesis has been decided exactly.
#[derive(Clone, Debug)]
pub struct CertifiedIdeal {
    ideal: Subalgebra,
    ambient: Subalgebra,
}

impl CertifiedIdeal {
    pub fn ideal(&self) -> &Subalgebra {
        &self.ideal
    }

    pub fn ambient(&self) -> &Subalgebra {
        &self.ambient
    }
}

/// Runs the exact ideal check; refuses with a precondition error if it fails.
pub fn certify_ideal(model: &MatrixModel, ideal: &Subalgebra, ambient: &Subalgebra) -> Result<CertifiedIdeal> {
    let verdict = is_ideal(model, ideal, ambient)?;
    if !verdict.is_ideal {
        let w = verdict.witness.expect("failing verdict carries a witness");
        return Err(Error::Precondition(format!(
            "{} is not an ideal of {}: bracket of ambient b{} with b{} escapes",
            ideal.recipe.label(),
            ambient.recipe.label(),
            w.ambient_index,
            w.ideal_index
        )));
    }
    Ok(CertifiedIdeal {
        ideal: ideal.clone(),
        ambient: ambient.clone(),
    })
}

/// Ordered products of one-parameter subgroups over a subalgebra basis.
#[derive(Clone, Debug)]
pub struct OrbitMap<'a> {
    model: &'a MatrixModel,
    gens: Vec<DMatrix<f64>>,
}

impl<'a> OrbitMap<'a> {
    pub fn new(model: &'a MatrixModel, sub: &Subalgebra) -> Self {
        OrbitMap {
            model,
            gens: sub.basis.iter().map(|b| b.to_f64()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.gens.len()
    }

    /// `exp(θ_1 X_1) ⋯ exp(θ_k X_k)`.
    pub fn element(&self, theta: &[f64]) -> DMatrix<f64> {
        let mut g = self.model.identity();
        for (t, x) in theta.iter().zip(&self.gens) {
            if *t != 0.0 {
                g *= expm(&(x * *t));
            }
        }
        g
    }

    pub fn point(&self, theta: &[f64], base: &Point) -> Point {
        self.model.act_unchecked(&self.element(theta), base)
    }
}

/// `g ∈ S` with `g.q = p`.
///
/// SPD: the upper-triangular Cholesky factors, which lie in `AN`.
/// Hyperboloid: the Iwasawa representatives `a_t n(u)` of both points.
/// Sphere: unitary completions of both unit vectors.
pub fn transitive_conjugator(model: &MatrixModel, p: &Point, q: &Point) -> Result<DMatrix<f64>> {
    if p.model != model.kind() || q.model != model.kind() || p.coords.shape() != q.coords.shape() {
        return Err(Error::Argument("points do not belong to this model".into()));
    }
    if p.coords == q.coords {
        return Ok(model.identity());
    }
    match model.kind() {
        ModelKind::Sl => {
            let up = upper_cholesky(&p.coords)?;
            let uq = upper_cholesky(&q.coords)?;
            let uq_inv = uq
                .try_inverse()
                .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
            Ok(up * uq_inv)
        }
        ModelKind::So1n => {
            let sp = hyperboloid_section(&p.coords)?;
            let sq_inv = hyperboloid_section_inverse(&q.coords)?;
            Ok(sp * sq_inv)
        }
        ModelKind::Hopf => {
            let up = unitary_completion(&p.coords)?;
            let uq = unitary_completion(&q.coords)?;
            Ok(up * uq.transpose())
        }
    }
}

/// `p = U Uᵀ` with `U` upper triangular with positive diagonal.
fn upper_cholesky(p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = p.nrows();
    let rev = DMatrix::from_fn(n, n, |i, j| if i + j == n - 1 { 1.0 } else { 0.0 });
    let l = cholesky_lower(&(&rev * p * &rev))?;
    Ok(&rev * l * &rev)
}

fn boost(size: usize, t: f64) -> DMatrix<f64> {
    let mut a = DMatrix::identity(size, size);
    a[(0, 0)] = t.cosh();
    a[(1, 1)] = t.cosh();
    a[(0, 1)] = t.sinh();
    a[(1, 0)] = t.sinh();
    a
}

/// `Σ u_i N_i` with `N_i = E_0i + E_i0 + E_1i - E_i1`, `i ≥ 2`; these span the
/// positive root space of the boost `E_01 + E_10`.
fn horo_generator(size: usize, u: &[f64]) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(size, size);
    for (k, ui) in u.iter().enumerate() {
        let i = k + 2;
        x[(0, i)] += ui;
        x[(i, 0)] += ui;
        x[(1, i)] += ui;
        x[(i, 1)] -= ui;
    }
    x
}

fn horo_coords(x: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    let lc = x[(0, 0)] - x[(1, 0)];
    if !(lc > 0.0) {
        return Err(Error::Numeric("point is not on the upper hyperboloid sheet".into()));
    }
    Ok((-lc.ln(), (2..x.nrows()).map(|i| x[(i, 0)]).collect()))
}

/// `s_x = a_t n(u)` with `s_x.e_0 = x`.
fn hyperboloid_section(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (t, u) = horo_coords(x)?;
    let size = x.nrows();
    Ok(boost(size, t) * expm(&horo_generator(size, &u)))
}

fn hyperboloid_section_inverse(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (t, u) = horo_coords(x)?;
    let size = x.nrows();
    let neg: Vec<f64> = u.iter().map(|v| -v).collect();
    Ok(expm(&horo_generator(size, &neg)) * boost(size, -t))
}

/// Real form of a unitary whose first column is the given unit vector.
fn unitary_completion(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = x.nrows() / 2;
    let z = DVector::from_fn(k, |i, _| Complex::new(x[(i, 0)], x[(i + k, 0)]));
    let norm = z.norm();
    if !(norm > 0.0) {
        return Err(Error::Numeric("cannot complete the zero vector".into()));
    }
    let mut cols: Vec<DVector<Complex<f64>>> = vec![z / Complex::new(norm, 0.0)];
    let mut unused: Vec<usize> = (0..k).collect();
    while cols.len() < k {
        // the standard vector with the largest residual keeps Gram-Schmidt stable
        let (pos, resid) = unused
            .iter()
            .enumerate()
            .map(|(pos, &j)| {
                let mut v = DVector::from_element(k, Complex::new(0.0, 0.0));
                v[j] = Complex::new(1.0, 0.0);
                for c in &cols {
                    let coef = c.dotc(&v);
                    v -= c * coef;
                }
                (pos, v)
            })
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .expect("fewer columns than dimension leaves an unused vector");
        unused.remove(pos);
        let n = resid.norm();
        cols.push(resid / Complex::new(n, 0.0));
    }
    let mut g = DMatrix::zeros(2 * k, 2 * k);
    for (j, c) in cols.iter().enumerate() {
        for i in 0..k {
            g[(i, j)] = c[i].re;
            g[(i + k, j + k)] = c[i].re;
            g[(i + k, j)] = c[i].im;
            g[(i, j + k)] = -c[i].im;
        }
    }
    Ok(g)
}

/// Largest principal-angle sine between `Ad(g) s'` and `s'`.
pub fn ad_normality(g: &DMatrix<f64>, sub: &Subalgebra) -> Result<f64> {
    if sub.basis.is_empty() {
        return Ok(0.0);
    }
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("conjugator is singular".into()))?;
    let orig: Vec<DMatrix<f64>> = sub.basis.iter().map(|b| b.to_f64()).collect();
    let moved: Vec<DMatrix<f64>> = orig.iter().map(|x| g * x * &g_inv).collect();
    if moved == orig {
        return Ok(0.0);
    }
    Ok(subspace_gap(&columns(&moved), &columns(&orig)))
}

fn columns(ms: &[DMatrix<f64>]) -> DMatrix<f64> {
    let len = ms[0].len();
    DMatrix::from_fn(len, ms.len(), |i, j| ms[j].as_slice()[i])
}

#[derive(Clone, Debug)]
pub struct OrbitSample {
    pub basepoint: Point,
    pub subalgebra: String,
    pub parameters: Vec<Vec<f64>>,
    pub points: Vec<Point>,
}

/// True when `sub` is spanned by the complex structure of the sphere model.
pub fn is_circle_action(model: &MatrixModel, sub: &Subalgebra) -> bool {
    model.kind() == ModelKind::Hopf
        && sub.dim() == 1
        && {
            let x = sub.basis[0].to_f64();
            let j = model.complex_structure();
            let s = x[(model.matrix_size() / 2, 0)];
            s != 0.0 && (x - j * s).amax() == 0.0
        }
}

/// Deterministic orbit samples; the first parameter is always zero.
///
/// Circle actions are sampled at equally spaced angles over a full period;
/// everything else uses Halton points in `[-radius, radius]^dim`.
pub fn sample_orbit(
    model: &MatrixModel,
    sub: &Subalgebra,
    base: &Point,
    budget: usize,
    radius: f64,
) -> Result<OrbitSample> {
    if budget == 0 {
        return Err(Error::Argument("sampling budget must be at least 1".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::Argument("sampling radius must be positive".into()));
    }
    let map = OrbitMap::new(model, sub);
    let dim = map.dim();
    if dim > 32 {
        return Err(Error::Argument(format!("orbit sampling supports up to 32 parameters, got {dim}")));
    }
    let parameters: Vec<Vec<f64>> = if is_circle_action(model, sub) {
        let period = 2.0 * PI / (sub.basis[0].to_f64()[(model.matrix_size() / 2, 0)]).abs();
        (0..budget).map(|i| vec![period * i as f64 / budget as f64]).collect()
    } else {
        (0..budget)
            .map(|i| {
                if i == 0 {
                    vec![0.0; dim]
                } else {
                    halton(i - 1, dim).iter().map(|h| (2.0 * h - 1.0) * radius).collect()
                }
            })
            .collect()
    };
    let points = parameters.iter().map(|t| map.point(t, base)).collect();
    Ok(OrbitSample {
        basepoint: base.clone(),
        subalgebra: sub.recipe.label(),
        parameters,
        points,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistanceOptions {
    pub multistarts: usize,
    pub max_iterations: usize,
    /// A run stops once the distance is at most this value.
    pub target: f64,
    pub radius: f64,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        DistanceOptions {
            multistarts: 4,
            max_iterations: 2000,
            target: 1e-9,
            radius: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitDistance {
    pub distance: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Upper bound for `dist(x, S'.base)` by multistart minimization over
/// exponential coordinates of the second kind.
///
/// Each start runs a least-squares warm start on the coordinate residual,
/// then simplex descent on the squared Riemannian distance.
pub fn distance_to_orbit(
    model: &MatrixModel,
    x: &Point,
    sub: &Subalgebra,
    base: &Point,
    opts: &DistanceOptions,
) -> Result<OrbitDistance> {
    model.validate_point(x)?;
    let map = OrbitMap::new(model, sub);
    let dim = map.dim();
    let d0 = model.distance(base, x)?;
    let mut best = OrbitDistance {
        distance: d0,
        converged: d0 <= opts.target,
        evaluations: 1,
    };
    if best.converged || dim == 0 {
        best.converged = true;
        return Ok(best);
    }
    let target_flat = flatten(&x.coords);
    let objective = |t: &[f64]| -> f64 {
        let y = map.point(t, base);
        model.distance(&y, x).map_or(f64::INFINITY, |d| d * d)
    };
    let residual = |t: &[f64]| -> Vec<f64> {
        let y = map.point(t, base);
        y.coords.iter().zip(&target_flat).map(|(a, b)| a - b).collect()
    };
    let nm = NelderMeadOptions {
        max_iterations: opts.max_iterations,
        target: opts.target * opts.target,
        ..Default::default()
    };
    let mut starts = vec![vec![0.0; dim]];
    starts.extend((0..opts.multistarts).map(|i| {
        halton(i, dim.min(32))
            .iter()
            .map(|h| (2.0 * h - 1.0) * opts.radius)
            .collect::<Vec<f64>>()
    }));
    for start in starts {
        let warm = least_squares(residual, &start, (1e-3 * opts.target).powi(2), 100);
        best.evaluations += warm.evaluations;
        let d = objective(&warm.x).sqrt();
        best.evaluations += 1;
        if d <= opts.target {
            return Ok(OrbitDistance {
                distance: d,
                converged: true,
                evaluations: best.evaluations,
            });
        }
        let m = nelder_mead(objective, &warm.x, &nm);
        best.evaluations += m.evaluations;
        let d = m.value.sqrt().min(d);
        if d < best.distance || (d == best.distance && m.converged) {
            best.distance = d;
            best.converged = m.converged;
        }
        if best.distance <= opts.target {
            best.converged = true;
            break;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CongruenceConfig {
    pub tol_conjugator: f64,
    pub tol_normality: f64,
    pub tol_orbit: f64,
    pub budget: usize,
    pub radius: f64,
    pub multistarts: usize,
    pub max_iterations: usize,
    pub bidirectional: bool,
    /// Coefficient range of the random algebra element used to draw points.
    pub point_scale: f64,
    pub seed: u64,
}

impl Default for CongruenceConfig {
    fn default() -> Self {
        CongruenceConfig {
            tol_conjugator: 1e-9,
            tol_normality: 1e-9,
            tol_orbit: 1e-6,
            budget: 64,
            radius: 1.0,
            multistarts: 4,
            max_iterations: 2000,
            bidirectional: true,
            point_scale: 0.5,
            seed: 0,
        }
    }
}

impl CongruenceConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tol_conjugator", self.tol_conjugator),
            ("tol_normality", self.tol_normality),
            ("tol_orbit", self.tol_orbit),
            ("radius", self.radius),
            ("point_scale", self.point_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be positive and finite"));
            }
        }
        if self.budget == 0 {
            return Err(Error::config("budget", "must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations", "must be at least 1"));
        }
        Ok(())
    }

    fn distance_options(&self) -> DistanceOptions {
        DistanceOptions {
            multistarts: self.multistarts,
            max_iterations: self.max_iterations,
            // stop well inside the tolerance so the verdict is not decided by optimizer noise
            target: self.tol_orbit * 1e-3,
            radius: self.radius,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CongruenceReport {
    pub model: String,
    pub subalgebra: String,
    pub subalgebra_dim: usize,
    pub conjugator: Vec<Vec<f64>>,
    pub conjugator_residual: f64,
    pub normality_residual: f64,
    pub max_distance_to_orbit: f64,
    /// Same quantity for `g⁻¹` applied to samples of `S'.p`, when run.
    pub max_reverse_distance_to_orbit: Option<f64>,
    pub samples_used: usize,
    pub unconverged: usize,
    /// Sampled lengths of the orbits through `q` and `p` for circle actions.
    pub circumferences: Option<[f64; 2]>,
    pub verdict: Verdict,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Sum of geodesic lengths between consecutive samples, closing the loop.
fn loop_length(model: &MatrixModel, points: &[Point]) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..points.len() {
        total += model.distance(&points[i], &points[(i + 1) % points.len()])?;
    }
    Ok(total)
}

fn max_orbit_distance(
    model: &MatrixModel,
    g: &DMatrix<f64>,
    sample: &OrbitSample,
    sub: &Subalgebra,
    target_base: &Point,
    opts: &DistanceOptions,
) -> Result<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut unconverged = 0;
    for x in &sample.points {
        let y = model.act_unchecked(g, x);
        let d = distance_to_orbit(model, &y, sub, target_base, opts)?;
        worst = worst.max(d.distance);
        if !d.converged {
            unconverged += 1;
        }
    }
    Ok((worst, unconverged))
}

/// Certifies `g.(S'.q) ⊆ S'.p` on samples (and the reverse inclusion when
/// `bidirectional` is set).
pub fn verify_congruence(
    model: &MatrixModel,
    ideal: &CertifiedIdeal,
    p: &Point,
    q: &Point,
    config: &CongruenceConfig,
) -> Result<CongruenceReport> {
    config.validate()?;
    model.validate_point(p)?;
    model.validate_point(q)?;
    let sub = &ideal.ideal;
    let g = transitive_conjugator(model, p, q)?;
    let gq = model.act_unchecked(&g, q);
    let conjugator_residual = (&gq.coords - &p.coords).norm();
    let normality_residual = ad_normality(&g, sub)?;
    let opts = config.distance_options();

    let sample_q = sample_orbit(model, sub, q, config.budget, config.radius)?;
    let (forward, mut unconverged) = max_orbit_distance(model, &g, &sample_q, sub, p, &opts)?;
    let mut samples_used = sample_q.points.len();

    let mut sample_p = None;
    let reverse = if config.bidirectional {
        let g_inv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numeric("conjugator is singular".into()))?;
        let sp = sample_orbit(model, sub, p, config.budget, config.radius)?;
        let (d, u) = max_orbit_distance(model, &g_inv, &sp, sub, q, &opts)?;
        unconverged += u;
        samples_used += sp.points.len();
        sample_p = Some(sp);
        Some(d)
    } else {
        None
    };

    let circumferences = if is_circle_action(model, sub) {
        let sp = match sample_p {
            Some(s) => s,
            None => sample_orbit(model, sub, p, config.budget, config.radius)?,
        };
        Some([loop_length(model, &sample_q.points)?, loop_length(model, &sp.points)?])
    } else {
        None
    };

    let pass = conjugator_residual <= config.tol_conjugator
        && normality_residual <= config.tol_normality
        && forward <= config.tol_orbit
        && reverse.map_or(true, |d| d <= config.tol_orbit)
        && unconverged == 0
        && circumferences.map_or(true, |c| c.iter().all(|l| (l - 2.0 * PI).abs() <= config.tol_orbit));

    Ok(CongruenceReport {
        model: model.name(),
        subalgebra: sub.recipe.label(),
        subalgebra_dim: sub.dim(),
        conjugator: matrix_rows(&g),
        conjugator_residual,
        normality_residual,
        max_distance_to_orbit: forward,
        max_reverse_distance_to_orbit: reverse,
        samples_used,
        unconverged,
        circumferences,
        verdict: Verdict::from_bool(pass),
    })
}

/// Aggregate over many random point pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairBatchReport {
    pub model: String,
    pub subalgebra: String,
    pub subalgebra_dim: usize,
    pub seed: u64,
    pub pairs: usize,
    pub config: CongruenceConfig,
    pub max_conjugator_residual: f64,
    pub max_normality_residual: f64,
    pub max_distance_to_orbit: f64,
    pub max_reverse_distance_to_orbit: Option<f64>,
    pub min_samples_per_orbit: usize,
    pub unconverged: usize,
    pub max_circumference_error: Option<f64>,
    pub failures: usize,
    pub first_failure: Option<CongruenceReport>,
    pub verdict: Verdict,
}

/// Random pairs drawn from the configured seed, checked independently.
pub fn verify_random_pairs(
    model: &MatrixModel,
    ideal: &CertifiedIdeal,
    pairs: usize,
    config: &CongruenceConfig,
    exec: Execution,
) -> Result<PairBatchReport> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let points: Vec<(Point, Point)> = (0..pairs)
        .map(|_| {
            let p = model.random_point(&mut rng, config.point_scale);
            let q = model.random_point(&mut rng, config.point_scale);
            (p, q)
        })
        .collect();
    let reports = exec.map(&points, |(p, q)| verify_congruence(model, ideal, p, q, config));
    let reports: Vec<CongruenceReport> = reports.into_iter().collect::<Result<_>>()?;
    let max = |f: &dyn Fn(&CongruenceReport) -> f64| reports.iter().map(f).fold(0.0f64, f64::max);
    let failures = reports.iter().filter(|r| r.verdict == Verdict::Fail).count();
    let circle = reports.iter().any(|r| r.circumferences.is_some());
    Ok(PairBatchReport {
        model: model.name(),
        subalgebra: ideal.ideal.recipe.label(),
        subalgebra_dim: ideal.ideal.dim(),
        seed: config.seed,
        pairs,
        config: config.clone(),
        max_conjugator_residual: max(&|r| r.conjugator_residual),
        max_normality_residual: max(&|r| r.normality_residual),
        max_distance_to_orbit: max(&|r| r.max_distance_to_orbit),
        max_reverse_distance_to_orbit: config
            .bidirectional
            .then(|| max(&|r| r.max_reverse_distance_to_orbit.unwrap_or(0.0))),
        min_samples_per_orbit: config.budget,
        unconverged: reports.iter().map(|r| r.unconverged).sum(),
        max_circumference_error: circle.then(|| {
            max(&|r| {
                r.circumferences
                    .map_or(0.0, |c| c.iter().map(|l| (l - 2.0 * PI).abs()).fold(0.0, f64::max))
            })
        }),
        failures,
        first_failure: reports.iter().find(|r| r.verdict == Verdict::Fail).cloned(),
        verdict: Verdict::from_bool(failures == 0 && pairs > 0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::make_model;
    use crate::rootspace::{decompose, maximal_abelian, positive_system};
    use crate::subalgebra::{build_a, build_iwasawa, unitary_and_center};
    use approx::assert_relative_eq;

    fn iwasawa(kind: ModelKind, n: usize) -> (MatrixModel, Subalgebra, Subalgebra) {
        let m = make_model(kind, n).unwrap();
        let a = maximal_abelian(&m).unwrap();
        let d = decompose(&m, &a).unwrap();
        let ps = positive_system(&d).unwrap();
        let (nn, s) = build_iwasawa(&m, &d, &ps).unwrap();
        (m, nn, s)
    }

    fn spd(m: &MatrixModel, entries: &[f64]) -> Point {
        let n = m.n();
        Point {
            model: ModelKind::Sl,
            coords: DMatrix::from_row_slice(n, n, entries),
        }
    }

    #[test]
    fn spd_conjugator_closed_form() {
        let m = make_model(ModelKind::Sl, 2).unwrap();
        let p = spd(&m, &[4.0, 0.0, 0.0, 0.25]);
        let g = transitive_conjugator(&m, &p, m.origin()).unwrap();
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]));
        assert_eq!(transitive_conjugator(&m, m.origin(), m.origin()).unwrap(), m.identity());
    }

    #[test]
    fn conjugators_map_q_to_p_and_lie_in_s() {
        for (kind, n) in [(ModelKind::Sl, 3), (ModelKind::So1n, 2), (ModelKind::So1n, 4), (ModelKind::Hopf, 2)] {
            let m = make_model(kind, n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..20 {
                let p = m.random_point(&mut rng, 1.0);
                let q = m.random_point(&mut rng, 1.0);
                let g = transitive_conjugator(&m, &p, &q).unwrap();
                m.check_group(&g).unwrap();
                let gq = m.act(&g, &q).unwrap();
                assert!((&gq.coords - &p.coords).norm() < 1e-10, "{kind:?}");
            }
        }
    }

    #[test]
    fn corrupted_spd_point_is_numeric_error() {
        let m = make_model(ModelKind::Sl, 2).unwrap();
        let bad = spd(&m, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(transitive_conjugator(&m, &bad, m.origin()), Err(Error::Numeric(_))));
    }

    #[test]
    fn normality_positive_and_negative() {
        let (m, n, s) = iwasawa(ModelKind::Sl, 2);
        assert_eq!(ad_normality(&m.identity(), &n).unwrap(), 0.0);
        let x = s.basis[0].to_f64() * 0.3 + s.basis[1].to_f64() * 1.1;
        assert!(ad_normality(&expm(&x), &n).unwrap() < 1e-12);
        let t = PI / 4.0;
        let rot = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        // Ad of a quarter-turn rotation tilts E_12 by the angle whose sine is computed here
        let e = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let moved = &rot * &e * rot.transpose();
        let cos = moved.dot(&e) / moved.norm();
        let oracle = (1.0 - cos * cos).sqrt();
        let gap = ad_normality(&rot, &n).unwrap();
        assert_relative_eq!(gap, oracle, epsilon = 1e-12);
        assert!(gap > 0.5);
    }

    #[test]
    fn horocycle_samples_closed_form() {
        let (m, n, _) = iwasawa(ModelKind::Sl, 2);
        let s = sample_orbit(&m, &n, m.origin(), 16, 2.0).unwrap();
        assert_eq!(s.points.len(), 16);
        assert_eq!(s.points[0], *m.origin());
        for (t, p) in s.parameters.iter().zip(&s.points) {
            m.validate_point(p).unwrap();
            // exp(tE) I exp(tE)^T = [[1 + t^2, t], [t, 1]]
            let x = t[0];
            let expect = DMatrix::from_row_slice(2, 2, &[1.0 + x * x, x, x, 1.0]);
            assert!((&p.coords - expect).amax() < 1e-14);
        }
        let one = sample_orbit(&m, &n, m.origin(), 1, 1.0).unwrap();
        assert_eq!(one.points, vec![m.origin().clone()]);
        assert!(sample_orbit(&m, &n, m.origin(), 0, 1.0).is_err());
    }

    #[test]
    fn distance_to_orbit_membership_and_separation() {
        let (m, n, _) = iwasawa(ModelKind::Sl, 2);
        let opts = DistanceOptions::default();
        let o = m.origin();
        let d = distance_to_orbit(&m, o, &n, o, &opts).unwrap();
        assert!(d.distance <= 1e-10 && d.converged);
        let s = sample_orbit(&m, &n, o, 8, 1.0).unwrap();
        for x in &s.points {
            assert!(distance_to_orbit(&m, x, &n, o, &opts).unwrap().distance <= 1e-6);
        }
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let x = m.exp_ray(&h, 1.0, o).unwrap();
        let d = distance_to_orbit(&m, &x, &n, o, &opts).unwrap();
        assert!(d.distance > 0.1, "{d:?}");
        // the orbit of N through o is a horocycle; the geodesic through o along a meets it orthogonally
        assert_relative_eq!(d.distance, m.distance(o, &x).unwrap(), epsilon = 1e-6);
    }

    #[test]
    fn refuses_without_ideal() {
        let (m, _, s) = iwasawa(ModelKind::Sl, 2);
        let mm = make_model(ModelKind::Sl, 2).unwrap();
        let a0 = maximal_abelian(&mm).unwrap();
        let d = decompose(&mm, &a0).unwrap();
        let a = build_a(&m, &d).unwrap();
        assert!(matches!(certify_ideal(&m, &a, &s), Err(Error::Precondition(_))));
    }

    #[test]
    fn congruence_same_point_and_random_pair() {
        let (m, n, s) = iwasawa(ModelKind::Sl, 3);
        let ideal = certify_ideal(&m, &n, &s).unwrap();
        let cfg = CongruenceConfig {
            budget: 16,
            ..Default::default()
        };
        let o = m.origin();
        let r = verify_congruence(&m, &ideal, o, o, &cfg).unwrap();
        assert_eq!(r.conjugator_residual, 0.0);
        assert_eq!(r.verdict, Verdict::Pass);
        let batch = verify_random_pairs(&m, &ideal, 3, &cfg, Execution::Sequential).unwrap();
        assert_eq!(batch.verdict, Verdict::Pass, "{batch:?}");
    }

    #[test]
    fn hopf_circles_have_length_two_pi() {
        let m = make_model(ModelKind::Hopf, 1).unwrap();
        let (u, z) = unitary_and_center(&m).unwrap();
        let ideal = certify_ideal(&m, &z, &u).unwrap();
        assert!(is_circle_action(&m, &z));
        let batch = verify_random_pairs(&m, &ideal, 4, &CongruenceConfig::default(), Execution::Sequential).unwrap();
        assert_eq!(batch.verdict, Verdict::Pass, "{batch:?}");
        assert!(batch.max_circumference_error.unwrap() < 1e-9);
    }

    #[test]
    fn batch_is_deterministic_across_execution_modes() {
        let (m, n, s) = iwasawa(ModelKind::So1n, 3);
        let ideal = certify_ideal(&m, &n, &s).unwrap();
        let cfg = CongruenceConfig {
            budget: 8,
            seed: 11,
            ..Default::default()
        };
        let a = verify_random_pairs(&m, &ideal, 4, &cfg, Execution::Sequential).unwrap();
        let b = verify_random_pairs(&m, &ideal, 4, &cfg, Execution::Parallel).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.verdict, Verdict::Pass, "{a:?}");
    }
}
