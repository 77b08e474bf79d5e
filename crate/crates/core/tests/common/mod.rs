#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use orbitcert::models::{make_model, MatrixModel, ModelKind};
use orbitcert::rootspace::{decompose, maximal_abelian, positive_system, PositiveSystem, RootSpaceDecomposition};
use orbitcert::subalgebra::{build_iwasawa, Subalgebra};

pub struct Ctx {
    pub m: MatrixModel,
    pub d: RootSpaceDecomposition,
    pub p: PositiveSystem,
    pub n: Subalgebra,
    pub s: Subalgebra,
}

pub fn ctx(kind: ModelKind, n: usize) -> Ctx {
    let m = make_model(kind, n).unwrap();
    let a = maximal_abelian(&m).unwrap();
    let d = decompose(&m, &a).unwrap();
    let p = positive_system(&d).unwrap();
    let (nn, s) = build_iwasawa(&m, &d, &p).unwrap();
    Ctx { m, d, p, n: nn, s }
}

pub const SL: ModelKind = ModelKind::Sl;
pub const SO: ModelKind = ModelKind::So1n;
pub const HOPF: ModelKind = ModelKind::Hopf;

/// Joint eigenspace dimensions of `ad(a)` found by scanning integer weights
/// in a box and computing kernels in double precision. Uses only the model
/// basis and the `a` basis, not the exact decomposition.
pub fn brute_force_weights(c: &Ctx) -> BTreeMap<Vec<i64>, usize> {
    let basis: Vec<DMatrix<f64>> = c.m.basis().iter().map(|b| b.to_f64()).collect();
    let a: Vec<DMatrix<f64>> = c.d.a_basis().iter().map(|h| h.to_f64()).collect();
    let d = basis.len();
    let len = basis[0].len();
    let r = a.len();
    let mut out = BTreeMap::new();
    let mut weight = vec![-2i64; r];
    loop {
        let mut stacked = DMatrix::zeros(len * r, d);
        for (k, h) in a.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let img = h * b - b * h - b * weight[k] as f64;
                for (i, v) in img.iter().enumerate() {
                    stacked[(k * len + i, j)] = *v;
                }
            }
        }
        let sv = stacked.svd(false, false).singular_values;
        let kernel = d - sv.iter().filter(|s| **s > 1e-9).count();
        if kernel > 0 {
            out.insert(weight.clone(), kernel);
        }
        let mut i = 0;
        while i < r {
            weight[i] += 1;
            if weight[i] <= 2 {
                break;
            }
            weight[i] = -2;
            i += 1;
        }
        if i == r {
            break;
        }
    }
    out
}


/// Three subspaces V of a: zero, a line, and all of a. In rank one the line
/// is spanned by twice the a generator, so it coincides with a as a subspace
/// but enters through a different spanning set.
pub fn v_choices(c: &Ctx) -> Vec<(String, Vec<orbitcert::exact::QMatrix>)> {
    let a = c.d.a_basis();
    let line = a[0].scale(&orbitcert::exact::q(2));
    vec![("V=0".into(), vec![]), ("V=line".into(), vec![line]), ("V=a".into(), a.to_vec())]
}

/// Every s_Phi for proper Phi, then the three s_V, each certified as an ideal of s.
pub fn congruence_subjects(c: &Ctx) -> Vec<orbitcert::congruence::CertifiedIdeal> {
    use orbitcert::congruence::certify_ideal;
    use orbitcert::rootspace::Phi;
    use orbitcert::subalgebra::{build_s_phi, build_s_v};
    let mut out = Vec::new();
    for phi in Phi::proper_subsets(c.d.rank()) {
        let sp = build_s_phi(&c.m, &c.d, &c.p, &phi).unwrap();
        out.push(certify_ideal(&c.m, &sp, &c.s).unwrap());
    }
    for (_, v) in v_choices(c) {
        let sv = build_s_v(&c.m, &c.d, &c.n, &v).unwrap();
        out.push(certify_ideal(&c.m, &sv, &c.s).unwrap());
    }
    out
}
