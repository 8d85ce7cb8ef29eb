//! Construction of the unique twisting map attached to a central kernel
//! subalgebra `B`, a free basis of `A` over `B`, and arbitrary `B`-linear
//! maps `g_l`, together with the uniqueness replay and the simplicity
//! criterion for these outputs.

use thiserror::Error;

use crate::algebra::{AlgebraHandle, Element, LinMap, Subspace};
use crate::mat::Mat;
use crate::scalar::Scalar;
use crate::twist::{build_twisted_algebra, GammaFamily, TwistError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("h = {h} does not divide n = {n}")]
    HDoesNotDivideN { h: usize, n: usize },
    #[error("B is not a subalgebra")]
    NotSubalgebra,
    #[error("B is not contained in the center of A")]
    NotCentral,
    #[error("the first free-basis element must be the unit")]
    FirstBasisElementNotUnit,
    #[error("the given elements are not a free B-module basis of A")]
    NotFreeBasis,
    #[error("expected {expected} maps g_l, got {got}")]
    WrongGCount { expected: usize, got: usize },
    #[error("g_{0} does not vanish on the unit")]
    GNotZeroOnUnit(usize),
    #[error("g_{0} is not B-linear")]
    NotBLinear(usize),
    #[error("h = 1 admits only the flip; all g_l must be zero")]
    NontrivialMapsForHOne,
    #[error("replay precondition failed: {0}")]
    ReplayPrecondition(String),
    #[error("tables differ at gamma^{r}_{j}")]
    MismatchAt { r: usize, j: usize },
    #[error("construction failed its own verification: {0}")]
    Internal(String),
    #[error(transparent)]
    Twist(#[from] TwistError),
}

/// Input data of the classification construction.
#[derive(Debug, Clone)]
pub struct ClassifierInput<S: Scalar> {
    pub algebra: AlgebraHandle<S>,
    /// A subalgebra of the center.
    pub b_basis: Subspace<S>,
    /// `b_0 = 1, b_1, ..., b_{h-1}`: a right `B`-module basis of `A`.
    pub free_basis: Vec<Element<S>>,
    /// Truncation order, a multiple of `h`.
    pub n: usize,
    /// `g_l` for `1 <= l < n/h`, `B`-linear with `g_l(1) = 0`.
    pub g: Vec<LinMap<S>>,
}

impl<S: Scalar> ClassifierInput<S> {
    pub fn h(&self) -> usize {
        self.free_basis.len()
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let alg = &self.algebra;
        let d = alg.dim();
        let h = self.h();
        if h == 0 || !self.n.is_multiple_of(h) {
            return Err(ClassifierError::HDoesNotDivideN { h, n: self.n });
        }
        if !alg.is_subalgebra(&self.b_basis) {
            return Err(ClassifierError::NotSubalgebra);
        }
        if !self
            .b_basis
            .basis_vectors()
            .iter()
            .all(|v| alg.is_central(v))
        {
            return Err(ClassifierError::NotCentral);
        }
        if self.free_basis[0] != alg.unit() {
            return Err(ClassifierError::FirstBasisElementNotUnit);
        }
        // freeness: the products b_j * w over the B-basis must span A with
        // the right count
        let b_vectors = self.b_basis.basis_vectors();
        if h * b_vectors.len() != d {
            return Err(ClassifierError::NotFreeBasis);
        }
        let cols: Vec<Vec<S>> = self
            .free_basis
            .iter()
            .flat_map(|bj| {
                b_vectors
                    .iter()
                    .map(|w| alg.prod(bj, w).coords)
                    .collect::<Vec<_>>()
            })
            .collect();
        if Mat::from_cols(cols).rank() != d {
            return Err(ClassifierError::NotFreeBasis);
        }
        let expected = self.n / h - 1;
        if self.g.len() != expected {
            return Err(ClassifierError::WrongGCount {
                expected,
                got: self.g.len(),
            });
        }
        for (l, gl) in self.g.iter().enumerate() {
            if !gl.apply(&alg.unit()).is_zero() {
                return Err(ClassifierError::GNotZeroOnUnit(l + 1));
            }
            let linear = b_vectors.iter().all(|w| {
                (0..d).all(|i| {
                    let a = alg.basis_element(i);
                    gl.apply(&alg.prod(&a, w)) == alg.prod(&gl.apply(&a), w)
                        && gl.apply(&alg.prod(w, &a)) == alg.prod(w, &gl.apply(&a))
                })
            });
            if !linear {
                return Err(ClassifierError::NotBLinear(l + 1));
            }
        }
        if h == 1 && self.g.iter().any(|gl| !gl.is_zero()) {
            return Err(ClassifierError::NontrivialMapsForHOne);
        }
        Ok(())
    }

    /// Expresses `a` as `Σ b_j λ_j` with `λ_j` in `B` and returns the `λ_j`.
    fn free_coordinates(&self, a: &Element<S>) -> Vec<Element<S>> {
        let alg = &self.algebra;
        let d = alg.dim();
        let h = self.h();
        let b_vectors = self.b_basis.basis_vectors();
        let cols: Vec<Vec<S>> = self
            .free_basis
            .iter()
            .flat_map(|bj| {
                b_vectors
                    .iter()
                    .map(|w| alg.prod(bj, w).coords)
                    .collect::<Vec<_>>()
            })
            .collect();
        let solution = Mat::from_cols(cols)
            .solve(&a.coords)
            .expect("validated free basis spans A");
        (0..h)
            .map(|j| {
                let mut lam = Element::zero(d);
                for (wi, w) in b_vectors.iter().enumerate() {
                    lam = lam.add(&w.scale(&solution[j * b_vectors.len() + wi]));
                }
                lam
            })
            .collect()
    }

    /// The `B`-linear shift `γ^1_0(b_i) = b_{i-1}`, `γ^1_0(1) = 0`.
    fn shift_map(&self) -> LinMap<S> {
        let alg = &self.algebra;
        let d = alg.dim();
        let images = (0..d)
            .map(|i| {
                let lam = self.free_coordinates(&alg.basis_element(i));
                let mut img = Element::zero(d);
                for j in 1..self.h() {
                    img = img.add(&alg.prod(&self.free_basis[j - 1], &lam[j]));
                }
                img
            })
            .collect();
        LinMap::from_images(images)
    }
}

/// Derived entries `γ^r_c` over a growing first row, by the recursion
/// `γ^r_c = Σ_u γ^1_u ∘ γ^{r-1}_{c-u}`; an entry is well defined as soon as
/// the first row is known up to column `c`.
struct PartialTable<'a, S: Scalar> {
    gamma1: &'a [LinMap<S>],
    field: S::Field,
    d: usize,
    memo: Vec<Vec<Option<LinMap<S>>>>,
}

impl<'a, S: Scalar> PartialTable<'a, S> {
    fn new(gamma1: &'a [LinMap<S>], field: S::Field, d: usize, max_r: usize, max_c: usize) -> Self {
        PartialTable {
            gamma1,
            field,
            d,
            memo: vec![vec![None; max_c + 1]; max_r + 1],
        }
    }

    fn entry(&mut self, r: usize, c: usize) -> LinMap<S> {
        if r == 0 {
            return if c == 0 {
                LinMap::identity(self.field, self.d)
            } else {
                LinMap::zero(self.d)
            };
        }
        if r == 1 {
            return self.gamma1[c].clone();
        }
        if let Some(m) = &self.memo[r][c] {
            return m.clone();
        }
        let mut acc = LinMap::zero(self.d);
        for u in 0..=c {
            let tail = self.entry(r - 1, c - u);
            acc = acc.add(&self.gamma1[u].compose(&tail));
        }
        self.memo[r][c] = Some(acc.clone());
        acc
    }
}

/// Runs the block-by-block construction: within each block `l` it sets
/// `γ^1_{lh} := g_l`, derives the rows it needs, and fills
/// `γ^1_{lh+j}(a) = γ^1_{lh}(a b_j) - Σ_{k<lh+j} γ^1_k(a) γ^k_{lh}(b_j)`.
/// The output always passes full verification; this is the existence half
/// of the classification, so a verification failure is an internal error.
pub fn classify_construct<S: Scalar>(
    input: &ClassifierInput<S>,
) -> Result<GammaFamily<S>, ClassifierError> {
    input.validate()?;
    let alg = input.algebra.clone();
    let d = alg.dim();
    let field = alg.field();
    let h = input.h();
    let n = input.n;

    if h == 1 {
        // B = A and s restricted to B is the flip, which forces the flip
        // globally; validation already rejected nonzero g_l.
        return Ok(GammaFamily::flip(alg, n));
    }

    let mut gamma1: Vec<LinMap<S>> = vec![input.shift_map()];
    for l in 0..(n / h) {
        if l > 0 {
            gamma1.push(input.g[l - 1].clone());
        }
        for j in 1..h {
            let bj = &input.free_basis[j];
            let first = gamma1[l * h].compose(&alg.right_mul(bj));
            let mut correction = LinMap::zero(d);
            {
                let mut table = PartialTable::new(&gamma1, field, d, l * h + j, l * h);
                for k in 0..(l * h + j) {
                    let ck = table.entry(k, l * h).apply(bj);
                    if ck.is_zero() {
                        continue;
                    }
                    correction = correction.add(&alg.right_mul(&ck).compose(&gamma1[k]));
                }
            }
            gamma1.push(first.sub(&correction));
        }
    }
    debug_assert_eq!(gamma1.len(), n);

    let fam = GammaFamily::derive(alg.clone(), gamma1)?;
    let verdict = fam.verify_twisting();
    if !verdict.pass() {
        return Err(ClassifierError::Internal(format!(
            "classified family violates {:?}",
            verdict.first().map(|v| &v.law)
        )));
    }
    // s(c ⊗ b) = b ⊗ c on B: γ^i_j(b) = δ_ij b for b in the B-basis
    for b in input.b_basis.basis_vectors() {
        for i in 0..=n {
            for j in 0..n {
                let got = fam.gamma(i, j).apply(&b);
                let want = if i == j { b.clone() } else { Element::zero(d) };
                if got != want {
                    return Err(ClassifierError::Internal(format!(
                        "s does not flip B at gamma^{i}_{j}"
                    )));
                }
            }
        }
    }
    Ok(fam)
}

/// The constructive content of uniqueness: rebuilding from the family's own
/// data must reproduce it entrywise.
pub fn uniqueness_replay<S: Scalar>(
    fam: &GammaFamily<S>,
    input: &ClassifierInput<S>,
) -> Result<(), ClassifierError> {
    input.validate()?;
    let report = crate::structure::analyze(fam);
    let h = input.h();
    if report.h != Some(h) {
        return Err(ClassifierError::ReplayPrecondition(format!(
            "family has h = {:?}, input has h = {h}",
            report.h
        )));
    }
    if !report.a1_verified {
        return Err(ClassifierError::ReplayPrecondition(
            "no invertible witness found for the family".into(),
        ));
    }
    if !report.b.equals(&input.b_basis) {
        return Err(ClassifierError::ReplayPrecondition(
            "ker gamma^1_0 differs from the input B".into(),
        ));
    }
    if fam.n() != input.n {
        return Err(ClassifierError::ReplayPrecondition(
            "truncation orders differ".into(),
        ));
    }
    let rebuilt = classify_construct(input)?;
    for r in 0..=input.n {
        for j in 0..input.n {
            if fam.gamma(r, j) != rebuilt.gamma(r, j) {
                return Err(ClassifierError::MismatchAt { r, j });
            }
        }
    }
    Ok(())
}

/// The `M_n(B)` certificate emitted alongside a `Simple` verdict:
/// `dim D = n^2 dim B`, `1 ⊗ y` nilpotent of order exactly `n`, and the
/// center of `D` no bigger than `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCertificate {
    pub n: usize,
    pub dim_b: usize,
    pub dim_d: usize,
    pub y_nilpotency_order: usize,
    pub center_dim: usize,
}

impl MatrixCertificate {
    pub fn holds(&self) -> bool {
        self.dim_d == self.n * self.n * self.dim_b
            && self.y_nilpotency_order == self.n
            && self.center_dim == self.dim_b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSimplicity {
    Simple(MatrixCertificate),
    NotSimple { reason: String },
    /// `dim B > 1` with no visible zero divisor: without factoring we cannot
    /// certify that `B` is a field.
    Unknown { caveat: String },
}

/// `D` is simple iff `B` is a field and `h = n`. The field test is certified
/// only for `dim B = 1`; for larger `B` a visible zero divisor among basis
/// products soundly yields `NotSimple`, anything else stays `Unknown`.
pub fn classifier_simplicity<S: Scalar>(
    input: &ClassifierInput<S>,
    fam: &GammaFamily<S>,
) -> Result<ClassifierSimplicity, ClassifierError> {
    let h = input.h();
    let n = input.n;
    if h != n {
        return Ok(ClassifierSimplicity::NotSimple {
            reason: format!("h = {h} < n = {n}: gamma^h_0 = 0 defeats the simplicity criterion"),
        });
    }
    let dim_b = input.b_basis.dim();
    if dim_b > 1 {
        // look for zero divisors among B-basis products
        let alg = &input.algebra;
        let b_vectors = input.b_basis.basis_vectors();
        for u in &b_vectors {
            let cols: Vec<Vec<S>> = b_vectors.iter().map(|w| alg.prod(u, w).coords).collect();
            let rank = Mat::from_cols(cols).rank();
            if rank < dim_b {
                return Ok(ClassifierSimplicity::NotSimple {
                    reason: "a B-basis element annihilates part of B, so B is not a field".into(),
                });
            }
        }
        return Ok(ClassifierSimplicity::Unknown {
            caveat: format!(
                "dim B = {dim_b} > 1 and no visible zero divisor; certifying that B is a field \
                 would require factorization"
            ),
        });
    }

    let twisted = build_twisted_algebra(fam)?;
    let alg = fam.algebra();
    let y = twisted.tensor(&alg.unit(), 1);
    let mut order = 1;
    let mut power = y.clone();
    while !power.is_zero() && order <= n + 1 {
        power = twisted.product().prod(&power, &y);
        order += 1;
    }
    let center_dim = twisted.product().center().dim();
    Ok(ClassifierSimplicity::Simple(MatrixCertificate {
        n,
        dim_b,
        dim_d: twisted.dim(),
        y_nilpotency_order: order,
        center_dim,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Algebra;
    use crate::scalar::{QField, Scalar};
    use crate::structure::analyze;
    use crate::twist::tests_support::kxk_family;
    use num::BigRational;

    type A = Algebra<BigRational>;

    fn kxk_input() -> ClassifierInput<BigRational> {
        let alg = A::split_product(QField, 2).into_handle();
        let unit = alg.unit();
        let b1 = alg.element_from_i64(&[1, -1]);
        let b = Subspace::from_vectors(2, vec![unit.coords.clone()]);
        ClassifierInput {
            algebra: alg,
            b_basis: b,
            free_basis: vec![unit, b1],
            n: 2,
            g: vec![],
        }
    }

    #[test]
    fn kxk_construction_reproduces_the_worked_maps() {
        let input = kxk_input();
        let fam = classify_construct(&input).unwrap();
        let alg = &input.algebra;
        let half = BigRational::ratio(QField, 1, 2);
        // γ^1_0(λ1, λ2) = ((λ1-λ2)/2, (λ1-λ2)/2)
        let e0 = alg.basis_element(0);
        let e1 = alg.basis_element(1);
        assert_eq!(
            fam.gamma(1, 0).apply(&e0),
            Element::new(vec![half.clone(), half.clone()])
        );
        assert_eq!(
            fam.gamma(1, 0).apply(&e1),
            Element::new(vec![-half.clone(), -half.clone()])
        );
        // γ^1_1 = swap
        assert_eq!(fam.gamma(1, 1).apply(&e0), e1);
        assert_eq!(fam.gamma(1, 1).apply(&e1), e0);
        assert!(fam.verify_twisting().pass());

        // agrees with the hand-built family
        let hand = kxk_family();
        for r in 0..=2 {
            for j in 0..2 {
                assert_eq!(fam.gamma(r, j), hand.gamma(r, j));
            }
        }
    }

    #[test]
    fn flip_from_h_one() {
        let alg = A::truncated_polynomial(QField, 2).into_handle();
        let input = ClassifierInput {
            b_basis: Subspace::full(QField, 2),
            free_basis: vec![alg.unit()],
            algebra: alg.clone(),
            n: 3,
            g: vec![LinMap::zero(2), LinMap::zero(2)],
        };
        let fam = classify_construct(&input).unwrap();
        assert_eq!(fam.gamma1(), GammaFamily::flip(alg, 3).gamma1());
    }

    #[test]
    fn dual_numbers_over_q_with_one_g() {
        let alg = A::truncated_polynomial(QField, 2).into_handle();
        let unit = alg.unit();
        let x = alg.basis_element(1);
        // g_1(1) = 0, g_1(x) = x
        let g1 = LinMap::from_images(vec![Element::zero(2), x.clone()]);
        let input = ClassifierInput {
            b_basis: Subspace::from_vectors(2, vec![unit.coords.clone()]),
            free_basis: vec![unit, x.clone()],
            algebra: alg.clone(),
            n: 4,
            g: vec![g1],
        };
        let fam = classify_construct(&input).unwrap();
        assert!(fam.verify_twisting().pass());
        // the block-0 construction forces γ^1_1(x) = -x
        assert_eq!(fam.gamma(1, 1).apply(&x), x.neg());
        let report = analyze(&fam);
        assert_eq!(report.h, Some(2));
        assert!(report.h_divides_n);
        assert!(uniqueness_replay(&fam, &input).is_ok());
    }

    #[test]
    fn h_must_divide_n() {
        let mut input = kxk_input();
        input.n = 3;
        input.g = vec![LinMap::zero(2)];
        assert!(matches!(
            classify_construct(&input),
            Err(ClassifierError::HDoesNotDivideN { h: 2, n: 3 })
        ));
    }

    #[test]
    fn replay_detects_perturbation() {
        let input = kxk_input();
        let fam = classify_construct(&input).unwrap();
        assert!(uniqueness_replay(&fam, &input).is_ok());

        // perturb one g entry in a richer input and replay against the
        // original family
        let alg = A::truncated_polynomial(QField, 2).into_handle();
        let unit = alg.unit();
        let x = alg.basis_element(1);
        let g1 = LinMap::from_images(vec![Element::zero(2), x.clone()]);
        let base = ClassifierInput {
            b_basis: Subspace::from_vectors(2, vec![unit.coords.clone()]),
            free_basis: vec![unit, x.clone()],
            algebra: alg,
            n: 4,
            g: vec![g1],
        };
        let fam = classify_construct(&base).unwrap();
        let mut perturbed = base.clone();
        perturbed.g = vec![LinMap::from_images(vec![
            Element::zero(2),
            x.scale(&BigRational::from_i64(QField, 2)),
        ])];
        let err = uniqueness_replay(&fam, &perturbed).unwrap_err();
        assert_eq!(err, ClassifierError::MismatchAt { r: 1, j: 2 });
    }

    #[test]
    fn not_b_linear_is_rejected() {
        // A = (k x k)[t]/<t^2> via the flip construction, B = k x k
        let kxk = A::split_product(QField, 2).into_handle();
        let flip = GammaFamily::flip(kxk.clone(), 2);
        let big = crate::twist::build_twisted_algebra(&flip)
            .unwrap()
            .product()
            .clone()
            .into_handle();
        let b = Subspace::from_vectors(
            4,
            vec![
                big.basis_element(0).coords.clone(),
                big.basis_element(1).coords.clone(),
            ],
        );
        let t = big.basis_element(2).add(&big.basis_element(3)); // 1 ⊗ t
        let free = vec![big.unit(), t];
        // g_1(u_0 t) = u_1 breaks B-linearity
        let g1 = LinMap::from_images(vec![
            Element::zero(4),
            Element::zero(4),
            big.basis_element(1),
            Element::zero(4),
        ]);
        let input = ClassifierInput {
            algebra: big,
            b_basis: b,
            free_basis: free,
            n: 4,
            g: vec![g1],
        };
        assert_eq!(input.validate(), Err(ClassifierError::NotBLinear(1)));
    }

    #[test]
    fn kxk_simplicity_certificate() {
        let input = kxk_input();
        let fam = classify_construct(&input).unwrap();
        match classifier_simplicity(&input, &fam).unwrap() {
            ClassifierSimplicity::Simple(cert) => {
                assert_eq!(cert.dim_d, 4);
                assert_eq!(cert.y_nilpotency_order, 2);
                assert_eq!(cert.center_dim, 1);
                assert!(cert.holds());
            }
            other => panic!("expected Simple, got {other:?}"),
        }
    }

    #[test]
    fn flip_replay_is_equal() {
        let alg = A::truncated_polynomial(QField, 2).into_handle();
        let input = ClassifierInput {
            b_basis: Subspace::full(QField, 2),
            free_basis: vec![alg.unit()],
            algebra: alg.clone(),
            n: 2,
            g: vec![LinMap::zero(2)],
        };
        let fam = classify_construct(&input).unwrap();
        assert!(uniqueness_replay(&fam, &input).is_ok());
    }

    #[test]
    fn field_kernel_of_dimension_two_stays_unknown() {
        // A = Q(i)[s]/<s^2> with B = Q(i): h = n = 2 and B is a field, but
        // without factorization the tool can only report the caveat
        let qi = A::quotient_polynomial(
            QField,
            &[
                BigRational::from_i64(QField, 1),
                BigRational::from_i64(QField, 0),
                BigRational::from_i64(QField, 1),
            ],
        )
        .into_handle();
        let flip = GammaFamily::flip(qi, 2);
        let big = crate::twist::build_twisted_algebra(&flip)
            .unwrap()
            .product()
            .clone()
            .into_handle();
        // basis {1, t, s, ts}
        let b = Subspace::from_vectors(
            4,
            vec![
                big.basis_element(0).coords.clone(),
                big.basis_element(1).coords.clone(),
            ],
        );
        let input = ClassifierInput {
            b_basis: b,
            free_basis: vec![big.unit(), big.basis_element(2)],
            algebra: big,
            n: 2,
            g: vec![],
        };
        let fam = classify_construct(&input).unwrap();
        assert!(matches!(
            classifier_simplicity(&input, &fam).unwrap(),
            ClassifierSimplicity::Unknown { .. }
        ));
    }

    #[test]
    fn h_less_than_n_is_not_simple() {
        let alg = A::truncated_polynomial(QField, 2).into_handle();
        let unit = alg.unit();
        let x = alg.basis_element(1);
        let input = ClassifierInput {
            b_basis: Subspace::from_vectors(2, vec![unit.coords.clone()]),
            free_basis: vec![unit, x],
            algebra: alg,
            n: 4,
            g: vec![LinMap::zero(2)],
        };
        let fam = classify_construct(&input).unwrap();
        assert!(matches!(
            classifier_simplicity(&input, &fam).unwrap(),
            ClassifierSimplicity::NotSimple { .. }
        ));
    }

    #[test]
    fn split_b_with_h_equal_n_is_not_simple() {
        // A = (k x k)[t]/<t^2>, B = k x k, h = n = 2: B has zero divisors
        let kxk = A::split_product(QField, 2).into_handle();
        let flip = GammaFamily::flip(kxk, 2);
        let big = crate::twist::build_twisted_algebra(&flip)
            .unwrap()
            .product()
            .clone()
            .into_handle();
        let b = Subspace::from_vectors(
            4,
            vec![
                big.basis_element(0).coords.clone(),
                big.basis_element(1).coords.clone(),
            ],
        );
        let t = big.basis_element(2).add(&big.basis_element(3));
        let input = ClassifierInput {
            b_basis: b,
            free_basis: vec![big.unit(), t],
            algebra: big,
            n: 2,
            g: vec![],
        };
        let fam = classify_construct(&input).unwrap();
        assert!(matches!(
            classifier_simplicity(&input, &fam).unwrap(),
            ClassifierSimplicity::NotSimple { .. }
        ));
    }
}
