mod common;

use common::{ctx, Ctx, SL, SO};
use nalgebra::{DMatrix, DVector};
use orbitcert::exact::Q;
use orbitcert::geometry::*;
use orbitcert::models::ModelKind;
use orbitcert::rootspace::Phi;
use orbitcert::subalgebra::{build_s_phi, Recipe, Subalgebra};
use orbitcert::Verdict;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

const MODELS: [(ModelKind, usize); 5] = [(SL, 3), (SL, 4), (SO, 2), (SO, 3), (SO, 4)];

fn ambient(c: &Ctx) -> Connection {
    levi_civita(&gram_to_f64(&induced_metric(&c.m, &c.s, &c.s).unwrap()), &brackets_f64(&c.s).unwrap()).unwrap()
}

#[test]
fn every_parabolic_orbit_is_minimal_and_einstein() {
    let tol = GeometryTolerances::default();
    for (k, n) in MODELS {
        let c = ctx(k, n);
        for phi in Phi::proper_subsets(c.d.rank()) {
            let sp = build_s_phi(&c.m, &c.d, &c.p, &phi).unwrap();
            let r = geometry_report(&c.m, &c.s, &sp, Some(&phi), &tol).unwrap();
            assert!(r.mean_curvature_norm <= 1e-9, "{k:?}{n} {phi}: {}", r.mean_curvature_norm);
            assert!(r.einstein_residual <= 1e-7, "{k:?}{n} {phi}: {}", r.einstein_residual);
            assert!(r.antisymmetry_residual <= 1e-10 && r.bianchi_residual <= 1e-10);
            assert!(r.ricci_symmetry_residual <= 1e-10);
            assert!(r.torsion_residual <= 1e-10 && r.metric_residual <= 1e-10);
            assert!(!r.flat);
            assert_eq!(r.verdict, Verdict::Pass);
        }
    }
}

#[derive(Deserialize)]
struct Frozen {
    einstein: Vec<EinsteinEntry>,
    horosphere: Vec<HorosphereEntry>,
}

#[derive(Deserialize)]
struct EinsteinEntry {
    model: String,
    n: usize,
    phi: Vec<usize>,
    constant: f64,
}

#[derive(Deserialize)]
struct HorosphereEntry {
    n: usize,
    mean_curvature_norm: f64,
}

#[test]
fn einstein_constants_match_frozen_values() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/einstein_constants.toml")).unwrap();
    let frozen: Frozen = toml::from_str(&text).unwrap();
    assert!(frozen.einstein.len() >= 10);
    for e in &frozen.einstein {
        let c = ctx(e.model.parse().unwrap(), e.n);
        let phi = Phi::from_one_based(&e.phi).unwrap();
        let sp = build_s_phi(&c.m, &c.d, &c.p, &phi).unwrap();
        let (_, fit) = ricci_induced(&c.m, &c.s, &sp).unwrap();
        assert!((fit.constant - e.constant).abs() <= 1e-8, "{}{} {:?}: {}", e.model, e.n, e.phi, fit.constant);
    }
    for h in &frozen.horosphere {
        let c = ctx(SO, h.n);
        let (_, norm) = mean_curvature(&c.m, &c.s, &c.n).unwrap();
        assert!((norm - h.mean_curvature_norm).abs() <= 1e-8);
    }
}

#[test]
fn horospheres_match_closed_form() {
    for n in 2..=4 {
        let c = ctx(SO, n);
        let kappa = 1.0 / (2.0 * (n as f64 - 1.0));
        let (_, norm) = mean_curvature(&c.m, &c.s, &c.n).unwrap();
        assert!((norm - (n as f64 - 1.0) * kappa.sqrt()).abs() <= 1e-10);
        assert!(norm >= 0.1);
        let r = geometry_report(&c.m, &c.s, &c.n, None, &GeometryTolerances::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.flat);
    }
    for n in 2..=5 {
        let c = ctx(SL, n);
        let (_, norm) = mean_curvature(&c.m, &c.s, &c.n).unwrap();
        assert!(norm >= 0.1);
    }
}

/// Hyperbolic space with this metric has constant sectional curvature
/// -1/(2(n-1)); check it on every pair of frame vectors.
#[test]
fn hyperbolic_space_has_constant_curvature() {
    for n in 2..=4 {
        let c = ctx(SO, n);
        let conn = ambient(&c);
        let e = conn.orthonormal_frame().unwrap();
        let expect = -1.0 / (2.0 * (n as f64 - 1.0));
        for (i, x) in e.iter().enumerate() {
            for y in &e[..i] {
                let k = conn.inner(&conn.curvature(x, y, y), x);
                assert!((k - expect).abs() <= 1e-12, "n={n} {k}");
            }
        }
        let (_, fit) = ricci_induced(&c.m, &c.s, &c.s).unwrap();
        assert!((fit.constant - (n as f64 - 1.0) * expect).abs() <= 1e-12);
    }
}

/// Intrinsic Ricci from the Gauss equation: ambient curvature from the
/// symmetric space formula on p, plus second fundamental form terms.
fn gauss_ricci(c: &Ctx, sub: &Subalgebra) -> DMatrix<f64> {
    let (amb, tangent, ii) = second_fundamental_form(&c.m, &c.s, sub).unwrap();
    let proj: Vec<DMatrix<f64>> = c.s.basis.iter().map(|b| project_p(&c.m, b).to_f64()).collect();
    let to_p = |v: &DVector<f64>| {
        proj.iter().zip(v.iter()).fold(DMatrix::zeros(proj[0].nrows(), proj[0].ncols()), |a, (x, t)| a + x * *t)
    };
    let br = |a: &DMatrix<f64>, b: &DMatrix<f64>| a * b - b * a;
    let p: Vec<DMatrix<f64>> = tangent.iter().map(to_p).collect();
    let k = tangent.len();
    DMatrix::from_fn(k, k, |a, b| {
        (0..k)
            .map(|i| {
                let r = -br(&br(&p[i], &p[a]), &p[b]);
                c.m.inner_f64(&r, &p[i]) + amb.inner(&ii[i][i], &ii[a][b]) - amb.inner(&ii[i][b], &ii[a][i])
            })
            .sum()
    })
}

#[test]
fn gauss_equation_oracle_agrees_with_intrinsic_ricci() {
    for (k, n) in MODELS {
        let c = ctx(k, n);
        let mut subs: Vec<Subalgebra> = Phi::proper_subsets(c.d.rank())
            .iter()
            .map(|phi| build_s_phi(&c.m, &c.d, &c.p, phi).unwrap())
            .collect();
        subs.push(c.n.clone());
        for sub in subs {
            let (_, fit) = ricci_induced(&c.m, &c.s, &sub).unwrap();
            let oracle = gauss_ricci(&c, &sub);
            assert!((&fit.ricci - &oracle).amax() <= 1e-9, "{k:?}{n} {}", sub.recipe.label());
        }
    }
}

#[test]
fn random_geodesics_satisfy_the_ambient_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (k, n) in [(SL, 2), (SL, 3), (SL, 4), (SO, 2), (SO, 3), (SO, 4)] {
        let c = ctx(k, n);
        let conn = ambient(&c);
        for _ in 0..10 {
            let v0 = DVector::from_fn(c.s.dim(), |_, _| rng.gen_range(-0.5..0.5));
            let t = rng.gen_range(0.2..1.0);
            let r = geodesic_residual(&c.m, &c.s, &conn, &v0, t, 1e-4).unwrap();
            assert!(r <= 1e-6, "{k:?}{n}: {r}");
        }
    }
}

#[test]
fn exp_ray_group_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (k, n) in [(SL, 3), (SO, 3)] {
        let c = ctx(k, n);
        for _ in 0..10 {
            let x = c.m.random_element(&mut rng, 0.5);
            let (t, u) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            assert!(exp_group_law_residual(&c.m, &x, t, u).unwrap() <= 1e-9);
        }
    }
}

#[test]
fn root_spaces_carry_half_the_metric() {
    let c = ctx(SL, 3);
    for r in &c.p.positive_roots {
        let sub = Subalgebra::from_spanning(&c.m, Recipe::Custom("g_alpha".into()), c.d.space(r).to_vec()).unwrap();
        let g = induced_metric(&c.m, &c.s, &sub).unwrap();
        let x = &sub.basis[0];
        assert_eq!(g[0][0], c.m.inner(x, x).unwrap() / Q::from_integer(2.into()));
    }
}

#[test]
fn induced_metric_rejects_outside_subalgebra() {
    let c = ctx(SL, 2);
    let k = Subalgebra::from_spanning(&c.m, Recipe::Custom("k".into()), c.m.k_basis()).unwrap();
    assert!(induced_metric(&c.m, &c.s, &k).is_err());
}
