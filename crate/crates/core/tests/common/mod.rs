#![allow(dead_code)]

//! Shared fixtures for the integration suites: the verified-family test
//! matrix and the small constructions the criteria exercise.

use ytwist_core::classifier::{classify_construct, ClassifierInput};
use ytwist_core::mat::Mat;
use ytwist_core::obstruction::{central_element_extender, extend_step, truncpoly_build};
use ytwist_core::scalar::{QField, Scalar};
use ytwist_core::twist::GammaFamily;
use ytwist_core::{Algebra, AlgebraHandle, Element, LinMap, Rat, Subspace};

pub fn q(n: i64) -> Rat {
    Rat::from_i64(QField, n)
}

pub fn qm(rows: Vec<Vec<i64>>) -> LinMap<Rat> {
    LinMap::new(Mat::from_rows(
        rows.into_iter()
            .map(|r| r.into_iter().map(q).collect())
            .collect(),
    ))
}

/// The two-idempotent classifier input: `A = Q x Q`, `B = Q(1,1)`,
/// `h = n = 2`, `b_1 = (1,-1)`.
pub fn kxk_input() -> ClassifierInput<Rat> {
    let alg = Algebra::<Rat>::split_product(QField, 2).into_handle();
    let unit = alg.unit();
    let b1 = alg.element_from_i64(&[1, -1]);
    ClassifierInput {
        b_basis: Subspace::from_vectors(2, vec![unit.coords.clone()]),
        free_basis: vec![unit, b1],
        algebra: alg,
        n: 2,
        g: vec![],
    }
}

/// `δ(x^k) = k x^k` on `k[x]/<x^m>`.
pub fn euler(m: usize) -> LinMap<Rat> {
    LinMap::new(Mat::from_fn(m, m, |r, c| if r == c { q(r as i64) } else { q(0) }))
}

/// `δ(x^k) = k x^{k+1}` on `k[x]/<x^m>`.
pub fn shift_derivation(m: usize) -> LinMap<Rat> {
    LinMap::new(Mat::from_fn(m, m, |r, c| if r == c + 1 { q(c as i64) } else { q(0) }))
}

/// Upper triangular family `0, id, maps...` on `alg`, derived and verified.
pub fn upper_family(alg: AlgebraHandle<Rat>, maps: Vec<LinMap<Rat>>) -> GammaFamily<Rat> {
    let d = alg.dim();
    let mut gamma1 = vec![LinMap::zero(d), LinMap::identity(QField, d)];
    gamma1.extend(maps);
    let fam = GammaFamily::derive(alg, gamma1).expect("derives");
    assert!(fam.verify_twisting().pass());
    fam
}

/// `Q(ζ_5)` as a 4-dimensional algebra together with the Galois map
/// `t -> t^2`.
pub fn q_zeta5() -> (AlgebraHandle<Rat>, LinMap<Rat>) {
    let coeffs: Vec<Rat> = (0..5).map(|_| q(1)).collect();
    let alg = Algebra::<Rat>::quotient_polynomial(QField, &coeffs).into_handle();
    let t = alg.basis_element(1);
    let images = (0..4)
        .map(|k| {
            let mut acc = alg.unit();
            for _ in 0..(2 * k) {
                acc = alg.prod(&acc, &t);
            }
            acc
        })
        .collect();
    (alg.clone(), LinMap::from_images(images))
}

/// The verified-family matrix used by the representation, associativity
/// and structure criteria.
pub fn family_matrix() -> Vec<(&'static str, GammaFamily<Rat>)> {
    let mut out: Vec<(&'static str, GammaFamily<Rat>)> = Vec::new();

    let qx3 = Algebra::<Rat>::truncated_polynomial(QField, 3).into_handle();
    out.push(("flip-qx3-n3", GammaFamily::flip(qx3.clone(), 3)));

    out.push(("kxk-n2", classify_construct(&kxk_input()).expect("classifies")));

    let dual = Algebra::<Rat>::truncated_polynomial(QField, 2).into_handle();
    let sigma = qm(vec![vec![1, 0], vec![0, -1]]);
    let delta = qm(vec![vec![0, 1], vec![0, 0]]);
    out.push((
        "ore-dual-n2",
        ytwist_core::twist::ore_truncated(dual.clone(), &sigma, &delta, 2).expect("ore"),
    ));

    let p1 = Element::new(vec![q(0), q(0), q(1), q(0)]);
    let p2 = Element::new(vec![q(0), q(0), q(0), q(1)]);
    out.push((
        "truncpoly-m4n3",
        truncpoly_build(QField, 4, &[p1, p2]).expect("builds"),
    ));

    let m2 = Algebra::<Rat>::matrix_algebra(QField, 2).into_handle();
    let mut ladder = GammaFamily::flip(m2.clone(), 2);
    ladder = extend_step(&ladder, &[]).expect("extends to 3");
    ladder = extend_step(&ladder, &[]).expect("extends to 4");
    out.push(("m2q-ladder-n4", ladder));

    let u = m2.basis_element(1); // E_01
    let ad_u = m2.left_mul(&u).sub(&m2.right_mul(&u));
    out.push(("m2q-ad-n3", upper_family(m2, vec![ad_u])));

    let unit = dual.unit();
    let x = dual.basis_element(1);
    let g1 = LinMap::from_images(vec![Element::zero(2), x.clone()]);
    let input = ClassifierInput {
        b_basis: Subspace::from_vectors(2, vec![unit.coords.clone()]),
        free_basis: vec![unit, x],
        algebra: dual,
        n: 4,
        g: vec![g1],
    };
    out.push(("classifier-dual-n4", classify_construct(&input).expect("classifies")));

    let (zeta, alpha) = q_zeta5();
    let fam2 = GammaFamily::derive(zeta.clone(), vec![LinMap::zero(4), alpha]).expect("derives");
    let t = zeta.basis_element(1);
    let a = zeta.basis_element(2);
    out.push((
        "zeta5-n3",
        central_element_extender(&fam2, &t, &a).expect("extends"),
    ));

    out
}
