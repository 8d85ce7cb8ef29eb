//! The twisting-map calculus.
//!
//! A linear map `s : k[y]/<y^n> ⊗ A -> A ⊗ k[y]/<y^n>` is encoded by its
//! coefficient maps `γ^r_j : A -> A` through `s(y^r ⊗ a) = Σ_j γ^r_j(a) ⊗ y^j`.
//! This module derives the full table from the first row, verifies the laws
//! that make `s` a twisting map, materializes the twisted algebra
//! `A ⊗_s k[y]/<y^n>`, its faithful representation in `M_n(A)`, the
//! lower-triangular (Ore-type) constructor and the simplicity test.
//!
//! For upper triangular families (`γ^1_0 = 0`) the map `s` on a
//! finite-dimensional algebra is bijective exactly when `γ^1_1` is; beyond
//! that observation, bijectivity of `s` is not analyzed here.

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{AlgebraError, AlgebraHandle, Element, LinMap, Subspace};
use crate::mat::Mat;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwistError {
    #[error("gamma^1_{0}(1) != delta_{{1,{0}}}")]
    UnitLawViolated(usize),
    #[error("expected {expected} first-row maps, got {got}")]
    WrongMapCount { expected: usize, got: usize },
    #[error("map dimension {got} does not match algebra dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("the family does not verify as a twisting map: {0}")]
    NotATwistingMap(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// A single violated law with a machine-readable witness.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Violation {
    /// Which law failed: `row-zero`, `unit-law`, `product-law`, `truncation`,
    /// or a validator-specific identifier.
    pub law: String,
    /// Law-specific coordinates (column/row/basis indices).
    pub indices: Vec<usize>,
    pub lhs: Vec<String>,
    pub rhs: Vec<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Default)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first(&self) -> Option<&Violation> {
        self.violations.first()
    }

    fn record<S: Scalar>(
        &mut self,
        law: &str,
        indices: Vec<usize>,
        lhs: &Element<S>,
        rhs: &Element<S>,
    ) {
        self.violations.push(Violation {
            law: law.to_string(),
            indices,
            lhs: lhs.coords.iter().map(Scalar::render).collect(),
            rhs: rhs.coords.iter().map(Scalar::render).collect(),
        });
    }

    pub fn merge(&mut self, other: Verdict) {
        self.violations.extend(other.violations);
    }
}

/// The coefficient maps of a (candidate) twisting map: the first row
/// `γ^1_0, ..., γ^1_{n-1}` plus the derived table `γ^r_j` for `0 <= r <= n`.
/// Row `n` is kept explicitly because its vanishing is exactly the
/// truncation condition that verification must check.
#[derive(Debug, Clone)]
pub struct GammaFamily<S: Scalar> {
    algebra: AlgebraHandle<S>,
    n: usize,
    table: Vec<Vec<LinMap<S>>>,
}

impl<S: Scalar> GammaFamily<S> {
    /// Builds the derived table from the first row using the recursion
    /// `γ^r_j = Σ_{l<=j} γ^1_l ∘ γ^{r-1}_{j-l}` and cross-checks a sample of
    /// entries against the composition-sum closed form.
    pub fn derive(algebra: AlgebraHandle<S>, gamma1: Vec<LinMap<S>>) -> Result<Self, TwistError> {
        let n = gamma1.len();
        if n == 0 {
            return Err(TwistError::WrongMapCount { expected: 1, got: 0 });
        }
        let d = algebra.dim();
        for g in &gamma1 {
            if g.dim() != d {
                return Err(TwistError::DimensionMismatch {
                    expected: d,
                    got: g.dim(),
                });
            }
        }
        let unit = algebra.unit();
        for (j, g) in gamma1.iter().enumerate() {
            let expected = if j == 1 { unit.clone() } else { Element::zero(d) };
            if g.apply(&unit) != expected {
                return Err(TwistError::UnitLawViolated(j));
            }
        }

        let field = algebra.field();
        let mut table: Vec<Vec<LinMap<S>>> = Vec::with_capacity(n + 1);
        let row0 = (0..n)
            .map(|j| {
                if j == 0 {
                    LinMap::identity(field, d)
                } else {
                    LinMap::zero(d)
                }
            })
            .collect();
        table.push(row0);
        table.push(gamma1);
        for r in 2..=n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let mut acc = LinMap::zero(d);
                for l in 0..=j {
                    acc = acc.add(&table[1][l].compose(&table[r - 1][j - l]));
                }
                row.push(acc);
            }
            table.push(row);
        }

        let fam = GammaFamily { algebra, n, table };
        if n >= 2 {
            for j in 0..n {
                if fam.table[2][j] != fam.closed_form(2, j) {
                    return Err(TwistError::Internal(format!(
                        "recursion and closed form disagree at (2, {j})"
                    )));
                }
            }
            if fam.table[n][n - 1] != fam.closed_form(n, n - 1) {
                return Err(TwistError::Internal(format!(
                    "recursion and closed form disagree at ({n}, {})",
                    n - 1
                )));
            }
        }
        Ok(fam)
    }

    /// The flip `s(y^r ⊗ a) = a ⊗ y^r`, a twisting map for every algebra.
    pub fn flip(algebra: AlgebraHandle<S>, n: usize) -> Self {
        let d = algebra.dim();
        let field = algebra.field();
        let gamma1 = (0..n)
            .map(|j| {
                if j == 1 {
                    LinMap::identity(field, d)
                } else {
                    LinMap::zero(d)
                }
            })
            .collect();
        GammaFamily::derive(algebra, gamma1).expect("flip always derives")
    }

    pub fn algebra(&self) -> &AlgebraHandle<S> {
        &self.algebra
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    /// `γ^r_j` for `0 <= r <= n`, `0 <= j < n`.
    pub fn gamma(&self, r: usize, j: usize) -> &LinMap<S> {
        &self.table[r][j]
    }

    pub fn gamma1(&self) -> &[LinMap<S>] {
        &self.table[1]
    }

    pub fn is_upper_triangular(&self) -> bool {
        self.table[1][0].is_zero()
    }

    /// `α := γ^1_1`.
    pub fn alpha(&self) -> LinMap<S> {
        if self.n >= 2 {
            self.table[1][1].clone()
        } else {
            // n = 1: the only surviving diagonal is γ^0_0
            LinMap::identity(self.algebra.field(), self.dim())
        }
    }

    /// The composition-sum closed form
    /// `γ^r_j = Σ_{u_1+...+u_r=j, u_i>=0} γ^1_{u_1} ∘ ... ∘ γ^1_{u_r}`,
    /// evaluated by direct enumeration. This is the independent route used
    /// to cross-check the recursion that fills the table.
    pub fn closed_form(&self, r: usize, j: usize) -> LinMap<S> {
        let d = self.dim();
        if r == 0 {
            return if j == 0 {
                LinMap::identity(self.algebra.field(), d)
            } else {
                LinMap::zero(d)
            };
        }
        let mut acc = LinMap::zero(d);
        let mut parts = Vec::with_capacity(r);
        self.enumerate_compositions(r, j, &mut parts, &mut acc);
        acc
    }

    fn enumerate_compositions(
        &self,
        r: usize,
        remaining: usize,
        parts: &mut Vec<usize>,
        acc: &mut LinMap<S>,
    ) {
        if parts.len() == r {
            if remaining == 0 {
                let mut comp = self.table[1][parts[0]].clone();
                for &u in &parts[1..] {
                    comp = comp.compose(&self.table[1][u]);
                }
                *acc = acc.add(&comp);
            }
            return;
        }
        let slots_left = r - parts.len();
        for u in 0..=remaining {
            if u >= self.n {
                break;
            }
            // the rest must be able to absorb remaining - u with parts < n
            if remaining - u > (slots_left - 1) * (self.n - 1) {
                continue;
            }
            parts.push(u);
            self.enumerate_compositions(r, remaining - u, parts, acc);
            parts.pop();
        }
    }

    /// Checks, exhaustively on basis pairs, the laws that make the family a
    /// twisting map: the row-zero identity, the unit law, the Product law
    /// for the first row, and the vanishing of the computed row `n`.
    pub fn verify_twisting(&self) -> Verdict {
        let mut verdict = Verdict::default();
        let d = self.dim();
        let alg = &self.algebra;
        let field = alg.field();
        let id = LinMap::identity(field, d);
        let zero_map = LinMap::zero(d);

        for j in 0..self.n {
            let expected = if j == 0 { &id } else { &zero_map };
            if &self.table[0][j] != expected {
                for u in 0..d {
                    let lhs = self.table[0][j].apply(&alg.basis_element(u));
                    let rhs = expected.apply(&alg.basis_element(u));
                    if lhs != rhs {
                        verdict.record("row-zero", vec![j, u], &lhs, &rhs);
                        break;
                    }
                }
            }
        }

        let unit = alg.unit();
        for j in 0..self.n {
            let lhs = self.table[1][j].apply(&unit);
            let rhs = if j == 1 {
                unit.clone()
            } else {
                Element::zero(d)
            };
            if lhs != rhs {
                verdict.record("unit-law", vec![j], &lhs, &rhs);
            }
        }

        // Product law: γ^1_j(ab) = Σ_{i<n} γ^1_i(a) γ^i_j(b) on basis pairs.
        for j in 0..self.n {
            for u in 0..d {
                let eu = alg.basis_element(u);
                for v in 0..d {
                    let ev = alg.basis_element(v);
                    let lhs = self.table[1][j].apply(&alg.prod(&eu, &ev));
                    let mut rhs = Element::zero(d);
                    for i in 0..self.n {
                        let term = alg.prod(
                            &self.table[1][i].apply(&eu),
                            &self.table[i][j].apply(&ev),
                        );
                        rhs = rhs.add(&term);
                    }
                    if lhs != rhs {
                        verdict.record("product-law", vec![j, u, v], &lhs, &rhs);
                    }
                }
            }
        }

        for j in 0..self.n {
            if !self.table[self.n][j].is_zero() {
                for u in 0..d {
                    let lhs = self.table[self.n][j].apply(&alg.basis_element(u));
                    if !lhs.is_zero() {
                        verdict.record("truncation", vec![j, u], &lhs, &Element::zero(d));
                        break;
                    }
                }
            }
        }

        verdict
    }

    /// The Composition law `γ^r_j = Σ_{l<=j} γ^i_l ∘ γ^{r-i}_{j-l}` for every
    /// split `0 <= i <= r`, over the whole stored table.
    pub fn composition_law_verdict(&self) -> Verdict {
        let mut verdict = Verdict::default();
        let d = self.dim();
        for r in 0..=self.n {
            for i in 0..=r {
                for j in 0..self.n {
                    let mut acc = LinMap::zero(d);
                    for l in 0..=j {
                        acc = acc.add(&self.table[i][l].compose(&self.table[r - i][j - l]));
                    }
                    if acc != self.table[r][j] {
                        let w = (0..d)
                            .find(|&u| {
                                acc.apply(&self.algebra.basis_element(u))
                                    != self.table[r][j].apply(&self.algebra.basis_element(u))
                            })
                            .unwrap_or(0);
                        let lhs = self.table[r][j].apply(&self.algebra.basis_element(w));
                        let rhs = acc.apply(&self.algebra.basis_element(w));
                        verdict.record("composition-law", vec![r, i, j, w], &lhs, &rhs);
                    }
                }
            }
        }
        verdict
    }

    /// When the first row starts `0, id, 0, ..., 0, γ^1_{j0}, ...` with
    /// `j0 >= 2`, the derived diagonals follow a rigid pattern; this asserts
    /// it as exact matrix identities. Returns `None` when no `j0 >= 2`
    /// prefix exists.
    pub fn diagonal_pattern_verdict(&self) -> Option<Verdict> {
        let d = self.dim();
        let field = self.algebra.field();
        let id = LinMap::identity(field, d);
        if self.n < 2 || !self.table[1][0].is_zero() || self.table[1][1] != id {
            return None;
        }
        let mut j0 = 2;
        while j0 < self.n && self.table[1][j0].is_zero() {
            j0 += 1;
        }
        if j0 < 2 {
            return None;
        }
        let mut verdict = Verdict::default();
        let mut check = |law: &str, idx: Vec<usize>, got: &LinMap<S>, want: &LinMap<S>| {
            if got != want {
                let w = (0..d)
                    .find(|&u| {
                        got.apply(&self.algebra.basis_element(u))
                            != want.apply(&self.algebra.basis_element(u))
                    })
                    .unwrap_or(0);
                verdict.record(
                    law,
                    idx,
                    &got.apply(&self.algebra.basis_element(w)),
                    &want.apply(&self.algebra.basis_element(w)),
                );
            }
        };
        let zero = LinMap::zero(d);
        for i in 1..self.n {
            for l in 0..i {
                check("diagonal-below", vec![i, l], &self.table[i][l], &zero);
            }
            check("diagonal-identity", vec![i, i], &self.table[i][i], &id);
            for l in 1..(j0 - 1).min(self.n - i) {
                check("diagonal-gap", vec![i, i + l], &self.table[i][i + l], &zero);
            }
        }
        if j0 < self.n {
            for i in 1..=(self.n - j0) {
                let want = self.table[1][j0].scale(&S::from_i64(field, i as i64));
                check(
                    "diagonal-multiple",
                    vec![i, i + j0 - 1],
                    &self.table[i][i + j0 - 1],
                    &want,
                );
            }
        }
        Some(verdict)
    }
}

/// The twisted tensor product `D = A ⊗_s k[y]/<y^n>` as a concrete
/// `d*n`-dimensional structure-constant algebra on the basis `e_u ⊗ y^j`,
/// ordered by `y`-degree blocks (`index = j*d + u`).
#[derive(Debug, Clone)]
pub struct TwistedAlgebra<S: Scalar> {
    family: GammaFamily<S>,
    product: crate::algebra::Algebra<S>,
}

impl<S: Scalar> TwistedAlgebra<S> {
    pub fn family(&self) -> &GammaFamily<S> {
        &self.family
    }

    pub fn product(&self) -> &crate::algebra::Algebra<S> {
        &self.product
    }

    pub fn base(&self) -> &AlgebraHandle<S> {
        self.family.algebra()
    }

    pub fn dim(&self) -> usize {
        self.product.dim()
    }

    pub fn index(&self, u: usize, j: usize) -> usize {
        j * self.family.dim() + u
    }

    /// `a ⊗ y^j` as an element of the product algebra.
    pub fn tensor(&self, a: &Element<S>, j: usize) -> Element<S> {
        let d = self.family.dim();
        let mut coords = vec![S::zero(); d * self.family.n()];
        for u in 0..d {
            coords[j * d + u] = a.coords[u].clone();
        }
        Element::new(coords)
    }
}

/// Materializes `A ⊗_s C` with multiplication
/// `(a ⊗ y^i)(b ⊗ y^j) = Σ_k a γ^i_k(b) ⊗ y^{k+j}` (truncated at `n`).
/// Associativity of the result is re-checked from scratch by the algebra
/// constructor; a failure there means the family data is inconsistent.
pub fn build_twisted_algebra<S: Scalar>(
    fam: &GammaFamily<S>,
) -> Result<TwistedAlgebra<S>, TwistError> {
    let verdict = fam.verify_twisting();
    if !verdict.pass() {
        return Err(TwistError::NotATwistingMap(format!(
            "{} violation(s), first: {:?}",
            verdict.violations.len(),
            verdict.first().map(|v| &v.law)
        )));
    }
    let alg = fam.algebra();
    let d = alg.dim();
    let n = fam.n();
    let dim = d * n;
    let names: Vec<String> = (0..n)
        .flat_map(|j| {
            (0..d).map(move |u| format!("{}*y^{}", alg.basis_names()[u], j))
        })
        .collect();
    let mut mul = vec![vec![vec![S::zero(); dim]; dim]; dim];
    for i in 0..n {
        for u in 0..d {
            let eu = alg.basis_element(u);
            for j in 0..n {
                for v in 0..d {
                    let ev = alg.basis_element(v);
                    let out = &mut mul[i * d + u][j * d + v];
                    for k in 0..(n - j) {
                        let w = alg.prod(&eu, &fam.gamma(i, k).apply(&ev));
                        for t in 0..d {
                            if !w.coords[t].is_zero() {
                                out[(k + j) * d + t] =
                                    out[(k + j) * d + t].clone() + w.coords[t].clone();
                            }
                        }
                    }
                }
            }
        }
    }
    let mut unit = vec![S::zero(); dim];
    unit[..d].clone_from_slice(&alg.unit().coords);
    let product = crate::algebra::Algebra::new(alg.field(), names, mul, unit)
        .map_err(|e| TwistError::Internal(format!("twisted product not associative: {e}")))?;
    Ok(TwistedAlgebra {
        family: fam.clone(),
        product,
    })
}

/// An `n x n` matrix with entries in `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct RepMatrix<S> {
    n: usize,
    entries: Vec<Element<S>>,
}

impl<S: Scalar> RepMatrix<S> {
    pub fn entry(&self, r: usize, c: usize) -> &Element<S> {
        &self.entries[r * self.n + c]
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn mul(&self, rhs: &RepMatrix<S>, alg: &crate::algebra::Algebra<S>) -> RepMatrix<S> {
        assert_eq!(self.n, rhs.n);
        let d = alg.dim();
        let mut entries = Vec::with_capacity(self.n * self.n);
        for r in 0..self.n {
            for c in 0..self.n {
                let mut acc = Element::zero(d);
                for k in 0..self.n {
                    acc = acc.add(&alg.prod(self.entry(r, k), rhs.entry(k, c)));
                }
                entries.push(acc);
            }
        }
        RepMatrix { n: self.n, entries }
    }

    pub fn add(&self, rhs: &RepMatrix<S>) -> RepMatrix<S> {
        assert_eq!(self.n, rhs.n);
        RepMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn scale(&self, s: &S) -> RepMatrix<S> {
        RepMatrix {
            n: self.n,
            entries: self.entries.iter().map(|e| e.scale(s)).collect(),
        }
    }

    pub fn zero(n: usize, d: usize) -> RepMatrix<S> {
        RepMatrix {
            n,
            entries: vec![Element::zero(d); n * n],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Element::is_zero)
    }
}

/// The faithful representation `φ : A ⊗_s C -> M_n(A)` given by
/// `φ(a ⊗ y^j) = M(a) J_0^j`, where `M(a)_{rc} = γ^r_c(a)` and `J_0` is the
/// nilpotent Jordan block.
pub struct Representation<'a, S: Scalar> {
    fam: &'a GammaFamily<S>,
}

impl<'a, S: Scalar> Representation<'a, S> {
    pub fn new(fam: &'a GammaFamily<S>) -> Self {
        Representation { fam }
    }

    /// `M(a)`.
    pub fn m_of(&self, a: &Element<S>) -> RepMatrix<S> {
        let n = self.fam.n();
        let entries = (0..n)
            .flat_map(|r| (0..n).map(move |c| self.fam.gamma(r, c).apply(a)))
            .collect();
        RepMatrix { n, entries }
    }

    /// The nilpotent Jordan block `J_0` (ones on the superdiagonal).
    pub fn jordan_block(&self) -> RepMatrix<S> {
        let n = self.fam.n();
        let alg = self.fam.algebra();
        let d = alg.dim();
        let mut entries = vec![Element::zero(d); n * n];
        for r in 0..n.saturating_sub(1) {
            entries[r * n + r + 1] = alg.unit();
        }
        RepMatrix { n, entries }
    }

    /// `φ(a ⊗ y^j) = M(a) J_0^j`: a column shift of `M(a)`.
    pub fn phi_tensor(&self, a: &Element<S>, j: usize) -> RepMatrix<S> {
        let n = self.fam.n();
        let d = self.fam.dim();
        let m = self.m_of(a);
        let mut entries = vec![Element::zero(d); n * n];
        for r in 0..n {
            for c in j..n {
                entries[r * n + c] = m.entry(r, c - j).clone();
            }
        }
        RepMatrix { n, entries }
    }

    /// `φ` on an arbitrary element of `D`, by linearity over the
    /// `e_u ⊗ y^j` basis (`index = j*d + u`).
    pub fn phi(&self, p: &Element<S>) -> RepMatrix<S> {
        let n = self.fam.n();
        let d = self.fam.dim();
        assert_eq!(p.dim(), n * d);
        let alg = self.fam.algebra();
        let mut acc = RepMatrix::zero(n, d);
        for j in 0..n {
            for u in 0..d {
                let s = &p.coords[j * d + u];
                if s.is_zero() {
                    continue;
                }
                acc = acc.add(&self.phi_tensor(&alg.basis_element(u), j).scale(s));
            }
        }
        acc
    }

    /// Checks `φ(PQ) = φ(P) φ(Q)` on all basis pairs of `D` and injectivity
    /// (the induced linear map has full rank `d*n`).
    pub fn verdict(&self, twisted: &TwistedAlgebra<S>) -> Verdict {
        let mut verdict = Verdict::default();
        let n = self.fam.n();
        let d = self.fam.dim();
        let alg = self.fam.algebra();
        let dim = n * d;

        let phis: Vec<RepMatrix<S>> = (0..dim)
            .map(|idx| self.phi_tensor(&alg.basis_element(idx % d), idx / d))
            .collect();

        for p in 0..dim {
            for q in 0..dim {
                let lhs = self.phi(&twisted.product().prod(
                    &twisted.product().basis_element(p),
                    &twisted.product().basis_element(q),
                ));
                let rhs = phis[p].mul(&phis[q], alg);
                if lhs != rhs {
                    let (r, c) = (0..n)
                        .flat_map(|r| (0..n).map(move |c| (r, c)))
                        .find(|&(r, c)| lhs.entry(r, c) != rhs.entry(r, c))
                        .unwrap();
                    verdict.record(
                        "rep-multiplicative",
                        vec![p, q, r, c],
                        lhs.entry(r, c),
                        rhs.entry(r, c),
                    );
                }
            }
        }

        // injectivity: stack φ(e_u ⊗ y^j) into columns and compute the rank
        let rows = n * n * d;
        let flat = Mat::from_fn(rows, dim, |row, col| {
            let (rc, w) = (row / d, row % d);
            let (r, c) = (rc / n, rc % n);
            phis[col].entry(r, c).coords[w].clone()
        });
        let rank = flat.rank();
        if rank != dim {
            verdict.violations.push(Violation {
                law: "rep-injective".into(),
                indices: vec![rank, dim],
                lhs: vec![rank.to_string()],
                rhs: vec![dim.to_string()],
            });
        }
        verdict
    }
}

/// Convenience wrapper per the library surface: the representation handle
/// plus its verdict.
pub fn representation<S: Scalar>(
    fam: &GammaFamily<S>,
) -> Result<(Representation<'_, S>, Verdict), TwistError> {
    let twisted = build_twisted_algebra(fam)?;
    let rep = Representation::new(fam);
    let verdict = rep.verdict(&twisted);
    Ok((rep, verdict))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OreError {
    #[error("sigma is not an algebra endomorphism")]
    NotEndomorphism,
    #[error("delta is not a sigma-derivation (fails on basis pair ({0}, {1}))")]
    NotSigmaDerivation(usize, usize),
    #[error("gamma^n_{0} does not vanish; the pair does not truncate at n")]
    Rejected(usize),
    #[error(transparent)]
    Twist(#[from] TwistError),
}

/// Lower-triangular (Ore-type) families: `γ^1_1 = σ`, `γ^1_0 = δ`, all
/// higher first-row maps zero. Accepted iff the computed row `n` vanishes.
pub fn ore_truncated<S: Scalar>(
    algebra: AlgebraHandle<S>,
    sigma: &LinMap<S>,
    delta: &LinMap<S>,
    n: usize,
) -> Result<GammaFamily<S>, OreError> {
    let d = algebra.dim();
    if !algebra.is_algebra_endomorphism(sigma) {
        return Err(OreError::NotEndomorphism);
    }
    for i in 0..d {
        for j in 0..d {
            let ei = algebra.basis_element(i);
            let ej = algebra.basis_element(j);
            let lhs = delta.apply(&algebra.prod(&ei, &ej));
            let rhs = algebra
                .prod(&delta.apply(&ei), &ej)
                .add(&algebra.prod(&sigma.apply(&ei), &delta.apply(&ej)));
            if lhs != rhs {
                return Err(OreError::NotSigmaDerivation(i, j));
            }
        }
    }
    let mut gamma1 = vec![delta.clone()];
    if n >= 2 {
        gamma1.push(sigma.clone());
        gamma1.extend((2..n).map(|_| LinMap::zero(d)));
    }
    let fam = GammaFamily::derive(algebra, gamma1)?;
    for j in 0..n {
        if !fam.gamma(n, j).is_zero() {
            return Err(OreError::Rejected(j));
        }
    }
    let verdict = fam.verify_twisting();
    if !verdict.pass() {
        return Err(OreError::Twist(TwistError::Internal(format!(
            "Ore-type family failed verification: {:?}",
            verdict.first().map(|v| &v.law)
        ))));
    }
    Ok(fam)
}

/// Simplicity of `A ⊗_s C`, decided through the criterion
/// `A a γ^{n-1}_0(A) = A for all nonzero a in ker γ^1_0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Simplicity<S> {
    Simple,
    /// A kernel element whose two-sided span of products is proper.
    NotSimple { witness: Element<S> },
    /// All kernel basis elements pass but `dim B > 1`, so basis checks do
    /// not cover every nonzero element of `B`.
    NecessaryConditionOnly,
}

pub fn simplicity_test<S: Scalar>(twisted: &TwistedAlgebra<S>) -> Simplicity<S> {
    let fam = twisted.family();
    let alg = fam.algebra();
    let d = alg.dim();
    let b = alg.kernel(fam.gamma(1, 0));
    let image = alg.image(fam.gamma(fam.n() - 1, 0));
    let full = Subspace::full(alg.field(), d);
    for w in b.basis_vectors() {
        let span = alg.span_of_products(&full, &w, &image);
        if span.dim() != d {
            return Simplicity::NotSimple { witness: w };
        }
    }
    if b.dim() == 1 {
        Simplicity::Simple
    } else {
        Simplicity::NecessaryConditionOnly
    }
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::GammaFamily;
    use crate::algebra::{Algebra, LinMap};
    use crate::mat::Mat;
    use crate::scalar::{QField, Scalar};
    use num::BigRational;

    /// The two-idempotent example: A = k x k, n = 2,
    /// γ^1_0 = ((λ1-λ2)/2, (λ1-λ2)/2), γ^1_1 = swap.
    pub(crate) fn kxk_family() -> GammaFamily<BigRational> {
        let alg = Algebra::split_product(QField, 2).into_handle();
        let half = BigRational::ratio(QField, 1, 2);
        let g0 = LinMap::new(Mat::from_rows(vec![
            vec![half.clone(), -half.clone()],
            vec![half.clone(), -half.clone()],
        ]));
        let g1 = LinMap::new(Mat::from_rows(vec![
            vec![BigRational::from_i64(QField, 0), BigRational::from_i64(QField, 1)],
            vec![BigRational::from_i64(QField, 1), BigRational::from_i64(QField, 0)],
        ]));
        GammaFamily::derive(alg, vec![g0, g1]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::tests_support::kxk_family;
    use super::*;
    use crate::algebra::Algebra;
    use crate::scalar::QField;
    use num::BigRational;

    type A = Algebra<BigRational>;

    fn q(n: i64) -> BigRational {
        BigRational::from_i64(QField, n)
    }

    fn qm(rows: Vec<Vec<i64>>) -> LinMap<BigRational> {
        LinMap::new(Mat::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(q).collect())
                .collect(),
        ))
    }

    #[test]
    fn flip_table_is_kronecker_delta() {
        let alg = A::truncated_polynomial(QField, 2).into_handle();
        let fam = GammaFamily::flip(alg.clone(), 3);
        let id = LinMap::identity(QField, 2);
        for r in 0..=3 {
            for j in 0..3 {
                if r == j {
                    assert_eq!(fam.gamma(r, j), &id);
                } else {
                    assert!(fam.gamma(r, j).is_zero(), "gamma^{r}_{j} should vanish");
                }
            }
        }
        assert!(fam.verify_twisting().pass());
    }

    #[test]
    fn kxk_row_two_vanishes_by_hand_composition() {
        let fam = kxk_family();
        // oracle: compose the two explicit maps by hand
        let g0 = fam.gamma1()[0].clone();
        let g1 = fam.gamma1()[1].clone();
        let gamma20 = g0.compose(&g0);
        let gamma21 = g0.compose(&g1).add(&g1.compose(&g0));
        assert!(gamma20.is_zero());
        assert!(gamma21.is_zero());
        assert_eq!(fam.gamma(2, 0), &gamma20);
        assert_eq!(fam.gamma(2, 1), &gamma21);
        assert!(fam.verify_twisting().pass());
    }

    #[test]
    fn kxk_with_identity_in_place_of_swap_fails() {
        let alg = A::split_product(QField, 2).into_handle();
        let half = BigRational::ratio(QField, 1, 2);
        let g0 = LinMap::new(Mat::from_rows(vec![
            vec![half.clone(), -half.clone()],
            vec![half.clone(), -half.clone()],
        ]));
        let g1 = LinMap::identity(QField, 2);
        let fam = GammaFamily::derive(alg, vec![g0, g1]).unwrap();
        let verdict = fam.verify_twisting();
        assert!(!verdict.pass());
        let first = verdict.first().unwrap();
        assert!(first.law == "product-law" || first.law == "truncation");
        assert!(!first.indices.is_empty());
    }

    #[test]
    fn unit_law_violation_is_reported_at_derive() {
        let alg = A::split_product(QField, 2).into_handle();
        let id = LinMap::identity(QField, 2);
        let err = GammaFamily::derive(alg, vec![id.clone(), id]).unwrap_err();
        assert_eq!(err, TwistError::UnitLawViolated(0));
    }

    #[test]
    fn lower_triangular_family_has_zero_above_the_row_index() {
        // σ(x) = -x, δ(x) = 1 on k[x]/<x^2>
        let alg = A::truncated_polynomial(QField, 2).into_handle();
        let sigma = qm(vec![vec![1, 0], vec![0, -1]]);
        let delta = qm(vec![vec![0, 1], vec![0, 0]]);
        let fam = ore_truncated(alg, &sigma, &delta, 2).unwrap();
        for r in 0..=2 {
            for j in 0..2 {
                if j > r {
                    assert!(fam.gamma(r, j).is_zero());
                }
            }
        }
    }

    #[test]
    fn ore_euler_on_dual_numbers_is_rejected_at_n2() {
        // σ = id, δ(x) = x is a derivation of k[x]/<x^2> with δ^2 != 0
        let alg = A::truncated_polynomial(QField, 2).into_handle();
        let sigma = LinMap::identity(QField, 2);
        let delta = qm(vec![vec![0, 0], vec![0, 1]]);
        let err = ore_truncated(alg, &sigma, &delta, 2).unwrap_err();
        assert_eq!(err, OreError::Rejected(0));
    }

    #[test]
    fn ore_flip_is_accepted() {
        let alg = A::split_product(QField, 2).into_handle();
        let fam = ore_truncated(alg, &LinMap::identity(QField, 2), &LinMap::zero(2), 4).unwrap();
        assert!(fam.verify_twisting().pass());
    }

    #[test]
    fn ore_rejects_non_derivation() {
        let alg = A::truncated_polynomial(QField, 2).into_handle();
        let sigma = LinMap::identity(QField, 2);
        // δ(x) = 1 is not a derivation for σ = id: δ(x·x) = 0 but the rule gives 2x
        let delta = qm(vec![vec![0, 1], vec![0, 0]]);
        let err = ore_truncated(alg, &sigma, &delta, 2).unwrap_err();
        assert!(matches!(err, OreError::NotSigmaDerivation(..)));
    }

    #[test]
    fn twisted_algebra_of_flip_is_plain_tensor_product() {
        let alg = A::truncated_polynomial(QField, 2).into_handle();
        let fam = GammaFamily::flip(alg.clone(), 3);
        let tw = build_twisted_algebra(&fam).unwrap();
        assert_eq!(tw.dim(), 6);
        let d = tw.product();
        // (e_u ⊗ y^i)(e_v ⊗ y^j) = (e_u e_v) ⊗ y^{i+j}
        for i in 0..3 {
            for j in 0..3 {
                for u in 0..2 {
                    for v in 0..2 {
                        let lhs = d.prod(
                            &tw.tensor(&alg.basis_element(u), i),
                            &tw.tensor(&alg.basis_element(v), j),
                        );
                        let base = alg.prod(&alg.basis_element(u), &alg.basis_element(v));
                        let rhs = if i + j < 3 {
                            tw.tensor(&base, i + j)
                        } else {
                            Element::zero(6)
                        };
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn twisted_algebra_right_multiplication_by_y_shifts() {
        let fam = kxk_family();
        let tw = build_twisted_algebra(&fam).unwrap();
        let alg = fam.algebra();
        let y = tw.tensor(&alg.unit(), 1);
        for u in 0..2 {
            let a0 = tw.tensor(&alg.basis_element(u), 0);
            assert_eq!(tw.product().prod(&a0, &y), tw.tensor(&alg.basis_element(u), 1));
            let a1 = tw.tensor(&alg.basis_element(u), 1);
            assert!(tw.product().prod(&a1, &y).is_zero());
        }
    }

    #[test]
    fn representation_of_kxk() {
        let fam = kxk_family();
        let tw = build_twisted_algebra(&fam).unwrap();
        let rep = Representation::new(&fam);
        let verdict = rep.verdict(&tw);
        assert!(verdict.pass(), "{:?}", verdict.first());

        // φ(1 ⊗ y) = J0 and J0^n = 0
        let alg = fam.algebra();
        let j0 = rep.jordan_block();
        assert_eq!(rep.phi_tensor(&alg.unit(), 1), j0);
        assert!(j0.mul(&j0, alg).is_zero());

        // (1,1) ⊗ y squares to zero in the representation
        let p = rep.phi(&tw.tensor(&alg.unit(), 1));
        assert!(p.mul(&p, alg).is_zero());

        // M(ab) = M(a) M(b) on all basis pairs
        for u in 0..2 {
            for v in 0..2 {
                let a = alg.basis_element(u);
                let b = alg.basis_element(v);
                assert_eq!(
                    rep.m_of(&alg.prod(&a, &b)),
                    rep.m_of(&a).mul(&rep.m_of(&b), alg)
                );
            }
        }
        assert_eq!(rep.m_of(&alg.unit()), {
            let mut m = RepMatrix::zero(2, 2);
            m.entries[0] = alg.unit();
            m.entries[3] = alg.unit();
            m
        });
    }

    #[test]
    fn simplicity_of_kxk_twist() {
        let fam = kxk_family();
        let tw = build_twisted_algebra(&fam).unwrap();
        assert_eq!(simplicity_test(&tw), Simplicity::Simple);
    }

    #[test]
    fn flip_is_never_simple_for_n_at_least_two() {
        let alg = A::split_product(QField, 2).into_handle();
        let fam = GammaFamily::flip(alg, 2);
        let tw = build_twisted_algebra(&fam).unwrap();
        assert!(matches!(simplicity_test(&tw), Simplicity::NotSimple { .. }));
    }

    #[test]
    fn basis_check_caveat_on_matrix_algebra_at_n1() {
        // n = 1 gives D = A with B = A; M2(Q) passes every basis check but
        // the verdict must stay a caveat since dim B > 1.
        let alg = A::matrix_algebra(QField, 2).into_handle();
        let fam = GammaFamily::flip(alg, 1);
        let tw = build_twisted_algebra(&fam).unwrap();
        assert_eq!(simplicity_test(&tw), Simplicity::NecessaryConditionOnly);
    }

    #[test]
    fn composition_law_holds_on_derived_tables() {
        for fam in [
            kxk_family(),
            GammaFamily::flip(A::truncated_polynomial(QField, 3).into_handle(), 4),
        ] {
            assert!(fam.composition_law_verdict().pass());
        }
    }

    #[test]
    fn closed_form_matches_recursion_everywhere() {
        let fam = kxk_family();
        for r in 0..=fam.n() {
            for j in 0..fam.n() {
                assert_eq!(&fam.closed_form(r, j), fam.gamma(r, j));
            }
        }
    }

    #[test]
    fn diagonal_pattern_for_sparse_first_row() {
        // A = Q[x]/<x^3>, n = 4, γ^1_2 = 0, γ^1_3 = Euler derivation: j0 = 3
        let alg = A::truncated_polynomial(QField, 3).into_handle();
        let euler = qm(vec![vec![0, 0, 0], vec![0, 1, 0], vec![0, 0, 2]]);
        let gamma1 = vec![
            LinMap::zero(3),
            LinMap::identity(QField, 3),
            LinMap::zero(3),
            euler.clone(),
        ];
        let fam = GammaFamily::derive(alg.clone(), gamma1).unwrap();
        assert!(fam.verify_twisting().pass());
        let verdict = fam.diagonal_pattern_verdict().unwrap();
        assert!(verdict.pass(), "{:?}", verdict.first());

        // j0 = 2: γ^1_2 = Euler, γ^1_3 = Euler^2, where the multiple law
        // pins γ^i_{i+1} = i γ^1_2 up to i = n - 2
        let gamma1 = vec![
            LinMap::zero(3),
            LinMap::identity(QField, 3),
            euler.clone(),
            euler.compose(&euler),
        ];
        let fam = GammaFamily::derive(alg, gamma1).unwrap();
        assert!(fam.verify_twisting().pass());
        let verdict = fam.diagonal_pattern_verdict().unwrap();
        assert!(verdict.pass(), "{:?}", verdict.first());
        assert_eq!(fam.gamma(2, 3), &euler.scale(&q(2)));
    }
}
