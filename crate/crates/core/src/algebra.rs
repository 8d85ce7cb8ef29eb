//! Finite-dimensional associative algebras given by structure constants,
//! their elements, linear maps and subspaces.
//!
//! An [`Algebra`] is a validated multiplication table over an exact field:
//! associativity and the unit laws are checked on all basis tuples at
//! construction and never assumed afterwards. Elements and maps are
//! immutable values; algebras are shared through [`AlgebraHandle`].

use std::sync::Arc;

use thiserror::Error;

use crate::mat::{vstack, Mat};
use crate::scalar::Scalar;

pub type AlgebraHandle<S> = Arc<Algebra<S>>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("associativity fails on basis triple ({0}, {1}, {2})")]
    NotAssociative(usize, usize, usize),
    #[error("unit law fails on basis element {0}")]
    BadUnit(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("element is not invertible")]
    NotInvertible,
    #[error("multiplication table has the wrong shape")]
    BadTableShape,
}

/// An element of an algebra, as coordinates over the algebra's basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Element<S> {
    pub coords: Vec<S>,
}

impl<S: Scalar> Element<S> {
    pub fn new(coords: Vec<S>) -> Self {
        Element { coords }
    }

    pub fn zero(dim: usize) -> Self {
        Element {
            coords: vec![S::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, rhs: &Element<S>) -> Element<S> {
        assert_eq!(self.dim(), rhs.dim());
        Element::new(
            self.coords
                .iter()
                .zip(&rhs.coords)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        )
    }

    pub fn sub(&self, rhs: &Element<S>) -> Element<S> {
        assert_eq!(self.dim(), rhs.dim());
        Element::new(
            self.coords
                .iter()
                .zip(&rhs.coords)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        )
    }

    pub fn neg(&self) -> Element<S> {
        Element::new(self.coords.iter().map(|a| -a.clone()).collect())
    }

    pub fn scale(&self, s: &S) -> Element<S> {
        Element::new(self.coords.iter().map(|a| s.clone() * a.clone()).collect())
    }
}

/// A `k`-linear map `A -> A`; column `i` holds the image of basis element `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinMap<S> {
    pub mat: Mat<S>,
}

impl<S: Scalar> LinMap<S> {
    pub fn new(mat: Mat<S>) -> Self {
        assert_eq!(mat.rows(), mat.cols(), "linear maps here are square");
        LinMap { mat }
    }

    pub fn from_images(images: Vec<Element<S>>) -> Self {
        LinMap::new(Mat::from_cols(images.into_iter().map(|e| e.coords).collect()))
    }

    pub fn identity(field: S::Field, dim: usize) -> Self {
        LinMap::new(Mat::identity(field, dim))
    }

    pub fn zero(dim: usize) -> Self {
        LinMap::new(Mat::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn apply(&self, v: &Element<S>) -> Element<S> {
        Element::new(self.mat.apply(&v.coords))
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &LinMap<S>) -> LinMap<S> {
        LinMap::new(self.mat.mul(&rhs.mat))
    }

    pub fn add(&self, rhs: &LinMap<S>) -> LinMap<S> {
        LinMap::new(self.mat.add(&rhs.mat))
    }

    pub fn sub(&self, rhs: &LinMap<S>) -> LinMap<S> {
        LinMap::new(self.mat.sub(&rhs.mat))
    }

    pub fn scale(&self, s: &S) -> LinMap<S> {
        LinMap::new(self.mat.scale(s))
    }

    pub fn is_zero(&self) -> bool {
        self.mat.is_zero()
    }

    pub fn pow(&self, e: usize, field: S::Field) -> LinMap<S> {
        LinMap::new(self.mat.pow(e, field))
    }
}

/// A linear subspace, stored as a reduced row echelon basis (one basis
/// vector per row), which makes equality and containment tests canonical.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace<S> {
    basis: Mat<S>,
}

impl<S: Scalar> Subspace<S> {
    pub fn from_vectors(dim: usize, vectors: Vec<Vec<S>>) -> Self {
        if vectors.is_empty() {
            return Subspace {
                basis: Mat::zeros(0, dim),
            };
        }
        let mut m = Mat::from_rows(vectors);
        let pivots = m.rref();
        let basis = Mat::from_fn(pivots.len(), dim, |r, c| m.at(r, c).clone());
        Subspace { basis }
    }

    pub fn full(field: S::Field, dim: usize) -> Self {
        Subspace {
            basis: Mat::identity(field, dim),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis_vectors(&self) -> Vec<Element<S>> {
        (0..self.dim())
            .map(|r| Element::new(self.basis.row(r).to_vec()))
            .collect()
    }

    pub fn contains(&self, v: &Element<S>) -> bool {
        assert_eq!(v.dim(), self.ambient_dim());
        let mut rem = v.coords.clone();
        for r in 0..self.dim() {
            let pivot = (0..self.ambient_dim())
                .find(|&c| !self.basis.at(r, c).is_zero())
                .expect("no zero rows in a subspace basis");
            if rem[pivot].is_zero() {
                continue;
            }
            let f = rem[pivot].clone();
            for c in 0..self.ambient_dim() {
                rem[c] = rem[c].clone() - f.clone() * self.basis.at(r, c).clone();
            }
        }
        rem.iter().all(|x| x.is_zero())
    }

    pub fn is_contained_in(&self, other: &Subspace<S>) -> bool {
        self.basis_vectors().iter().all(|v| other.contains(v))
    }

    pub fn equals(&self, other: &Subspace<S>) -> bool {
        self.basis == other.basis
    }
}

/// A finite-dimensional unital associative algebra over an exact field,
/// presented by structure constants.
#[derive(Debug, Clone)]
pub struct Algebra<S: Scalar> {
    field: S::Field,
    dim: usize,
    basis_names: Vec<String>,
    /// `mul[i][j]` holds the coordinates of `e_i * e_j`.
    mul: Vec<Vec<Vec<S>>>,
    unit: Vec<S>,
}

impl<S: Scalar> Algebra<S> {
    /// Validates and wraps a multiplication table. Associativity is checked
    /// on all `d^3` basis triples and the unit laws on every basis element.
    pub fn new(
        field: S::Field,
        basis_names: Vec<String>,
        mul: Vec<Vec<Vec<S>>>,
        unit: Vec<S>,
    ) -> Result<Self, AlgebraError> {
        let dim = basis_names.len();
        if mul.len() != dim
            || mul.iter().any(|row| row.len() != dim)
            || mul
                .iter()
                .any(|row| row.iter().any(|entry| entry.len() != dim))
        {
            return Err(AlgebraError::BadTableShape);
        }
        if unit.len() != dim {
            return Err(AlgebraError::DimensionMismatch {
                expected: dim,
                got: unit.len(),
            });
        }
        let alg = Algebra {
            field,
            dim,
            basis_names,
            mul,
            unit,
        };
        for i in 0..dim {
            for j in 0..dim {
                for l in 0..dim {
                    let left = alg.prod_coords(&alg.mul[i][j], &alg.basis_coords(l));
                    let right = alg.prod_coords(&alg.basis_coords(i), &alg.mul[j][l]);
                    if left != right {
                        return Err(AlgebraError::NotAssociative(i, j, l));
                    }
                }
            }
        }
        for i in 0..dim {
            let e = alg.basis_coords(i);
            if alg.prod_coords(&alg.unit, &e) != e || alg.prod_coords(&e, &alg.unit) != e {
                return Err(AlgebraError::BadUnit(i));
            }
        }
        Ok(alg)
    }

    /// `k[x]/<x^m>` with basis `1, x, ..., x^{m-1}`.
    pub fn truncated_polynomial(field: S::Field, m: usize) -> Self {
        assert!(m >= 1);
        let names = (0..m)
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{i}"),
            })
            .collect();
        let mul = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let mut v = vec![S::from_i64(field, 0); m];
                        if i + j < m {
                            v[i + j] = S::from_i64(field, 1);
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        let mut unit = vec![S::from_i64(field, 0); m];
        unit[0] = S::from_i64(field, 1);
        Algebra::new(field, names, mul, unit).expect("truncated polynomial table is associative")
    }

    /// The full matrix algebra `M_n(k)` on the basis `E_{rc}`, ordered
    /// row-major (`E_00, E_01, ..., E_{n-1,n-1}`).
    pub fn matrix_algebra(field: S::Field, n: usize) -> Self {
        let d = n * n;
        let idx = |r: usize, c: usize| r * n + c;
        let names = (0..n)
            .flat_map(|r| (0..n).map(move |c| format!("E{r}{c}")))
            .collect();
        let mul = (0..d)
            .map(|a| {
                let (i, j) = (a / n, a % n);
                (0..d)
                    .map(|b| {
                        let (k, l) = (b / n, b % n);
                        let mut v = vec![S::from_i64(field, 0); d];
                        if j == k {
                            v[idx(i, l)] = S::from_i64(field, 1);
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        let mut unit = vec![S::from_i64(field, 0); d];
        for r in 0..n {
            unit[idx(r, r)] = S::from_i64(field, 1);
        }
        Algebra::new(field, names, mul, unit).expect("matrix units are associative")
    }

    /// `k[t]/<f>` for a monic polynomial `f`, on the basis
    /// `1, t, ..., t^{deg f - 1}`. `min_poly` lists the coefficients of `f`
    /// from the constant term up, ending in `1`.
    pub fn quotient_polynomial(field: S::Field, min_poly: &[S]) -> Self {
        let deg = min_poly.len() - 1;
        assert!(deg >= 1, "minimal polynomial must have positive degree");
        assert!(
            min_poly[deg] == S::from_i64(field, 1),
            "minimal polynomial must be monic"
        );
        // representatives of t^k for k < 2*deg - 1
        let mut reps: Vec<Vec<S>> = Vec::with_capacity(2 * deg - 1);
        for k in 0..deg {
            let mut v = vec![S::from_i64(field, 0); deg];
            v[k] = S::from_i64(field, 1);
            reps.push(v);
        }
        for k in deg..(2 * deg - 1) {
            // t^k = -Σ_i c_i t^{k-deg+i}
            let mut v = vec![S::from_i64(field, 0); deg];
            for (i, c) in min_poly.iter().take(deg).enumerate() {
                if c.is_zero() {
                    continue;
                }
                for (w, r) in v.iter_mut().zip(&reps[k - deg + i]) {
                    *w = w.clone() - c.clone() * r.clone();
                }
            }
            reps.push(v);
        }
        let names = (0..deg)
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "t".to_string(),
                _ => format!("t^{i}"),
            })
            .collect();
        let mul = (0..deg)
            .map(|i| (0..deg).map(|j| reps[i + j].clone()).collect())
            .collect();
        let mut unit = vec![S::from_i64(field, 0); deg];
        unit[0] = S::from_i64(field, 1);
        Algebra::new(field, names, mul, unit).expect("polynomial quotient is associative")
    }

    /// `k x k x ... x k` (`copies` factors) with componentwise product.
    pub fn split_product(field: S::Field, copies: usize) -> Self {
        let names = (0..copies).map(|i| format!("e{i}")).collect();
        let mul = (0..copies)
            .map(|i| {
                (0..copies)
                    .map(|j| {
                        let mut v = vec![S::from_i64(field, 0); copies];
                        if i == j {
                            v[i] = S::from_i64(field, 1);
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        let unit = vec![S::from_i64(field, 1); copies];
        Algebra::new(field, names, mul, unit).expect("split product is associative")
    }

    pub fn field(&self) -> S::Field {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_names(&self) -> &[String] {
        &self.basis_names
    }

    pub fn mul_table(&self) -> &Vec<Vec<Vec<S>>> {
        &self.mul
    }

    pub fn unit(&self) -> Element<S> {
        Element::new(self.unit.clone())
    }

    pub fn basis_element(&self, i: usize) -> Element<S> {
        Element::new(self.basis_coords(i))
    }

    fn basis_coords(&self, i: usize) -> Vec<S> {
        let mut v = vec![S::zero(); self.dim];
        v[i] = S::from_i64(self.field, 1);
        v
    }

    pub fn scalar(&self, n: i64) -> S {
        S::from_i64(self.field, n)
    }

    pub fn element_from_i64(&self, coords: &[i64]) -> Element<S> {
        assert_eq!(coords.len(), self.dim);
        Element::new(coords.iter().map(|&c| S::from_i64(self.field, c)).collect())
    }

    fn prod_coords(&self, a: &[S], b: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        for i in 0..self.dim {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..self.dim {
                if b[j].is_zero() {
                    continue;
                }
                let f = a[i].clone() * b[j].clone();
                for k in 0..self.dim {
                    let t = self.mul[i][j][k].clone();
                    if !t.is_zero() {
                        out[k] = out[k].clone() + f.clone() * t;
                    }
                }
            }
        }
        out
    }

    /// Product of two elements; the bilinear extension of the table.
    pub fn prod(&self, a: &Element<S>, b: &Element<S>) -> Element<S> {
        debug_assert_eq!(a.dim(), self.dim);
        debug_assert_eq!(b.dim(), self.dim);
        Element::new(self.prod_coords(&a.coords, &b.coords))
    }

    /// Checked product, for callers holding elements of unknown provenance.
    pub fn multiply(&self, a: &Element<S>, b: &Element<S>) -> Result<Element<S>, AlgebraError> {
        for e in [a, b] {
            if e.dim() != self.dim {
                return Err(AlgebraError::DimensionMismatch {
                    expected: self.dim,
                    got: e.dim(),
                });
            }
        }
        Ok(self.prod(a, b))
    }

    /// Left multiplication operator `x -> a*x`.
    pub fn left_mul(&self, a: &Element<S>) -> LinMap<S> {
        LinMap::from_images((0..self.dim).map(|i| self.prod(a, &self.basis_element(i))).collect())
    }

    /// Right multiplication operator `x -> x*a`.
    pub fn right_mul(&self, a: &Element<S>) -> LinMap<S> {
        LinMap::from_images((0..self.dim).map(|i| self.prod(&self.basis_element(i), a)).collect())
    }

    /// Two-sided inverse, obtained by exact solves of `a*x = 1` and
    /// `y*a = 1`. Both must exist; they then agree.
    pub fn invert(&self, a: &Element<S>) -> Result<Element<S>, AlgebraError> {
        if a.dim() != self.dim {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.dim,
                got: a.dim(),
            });
        }
        let right = self.left_mul(a).mat.solve(&self.unit);
        let left = self.right_mul(a).mat.solve(&self.unit);
        match (left, right) {
            (Some(y), Some(x)) => {
                debug_assert_eq!(x, y, "one-sided inverses must agree");
                Ok(Element::new(x))
            }
            _ => Err(AlgebraError::NotInvertible),
        }
    }

    pub fn is_invertible(&self, a: &Element<S>) -> bool {
        self.invert(a).is_ok()
    }

    /// The center, computed as the joint nullspace of the commutator
    /// operators `z -> e_i*z - z*e_i`.
    pub fn center(&self) -> Subspace<S> {
        let stacked: Vec<Mat<S>> = (0..self.dim)
            .map(|i| {
                let e = self.basis_element(i);
                self.left_mul(&e).sub(&self.right_mul(&e)).mat
            })
            .collect();
        let ns = vstack(&stacked).nullspace();
        Subspace::from_vectors(self.dim, ns)
    }

    pub fn is_central(&self, a: &Element<S>) -> bool {
        (0..self.dim).all(|i| {
            let e = self.basis_element(i);
            self.prod(a, &e) == self.prod(&e, a)
        })
    }

    pub fn kernel(&self, f: &LinMap<S>) -> Subspace<S> {
        assert_eq!(f.dim(), self.dim);
        Subspace::from_vectors(self.dim, f.mat.nullspace())
    }

    pub fn image(&self, f: &LinMap<S>) -> Subspace<S> {
        let cols = (0..self.dim).map(|c| f.mat.col(c)).collect();
        Subspace::from_vectors(self.dim, cols)
    }

    /// Closure under multiplication plus unit membership.
    pub fn is_subalgebra(&self, sub: &Subspace<S>) -> bool {
        if sub.ambient_dim() != self.dim || !sub.contains(&self.unit()) {
            return false;
        }
        let basis = sub.basis_vectors();
        basis
            .iter()
            .all(|u| basis.iter().all(|v| sub.contains(&self.prod(u, v))))
    }

    pub fn is_algebra_endomorphism(&self, f: &LinMap<S>) -> bool {
        if f.dim() != self.dim || f.apply(&self.unit()) != self.unit() {
            return false;
        }
        (0..self.dim).all(|i| {
            (0..self.dim).all(|j| {
                let ei = self.basis_element(i);
                let ej = self.basis_element(j);
                f.apply(&self.prod(&ei, &ej)) == self.prod(&f.apply(&ei), &f.apply(&ej))
            })
        })
    }

    /// Linear span of `{ u*a*v : u in s-basis, v in t-basis }`.
    pub fn span_of_products(
        &self,
        s: &Subspace<S>,
        a: &Element<S>,
        t: &Subspace<S>,
    ) -> Subspace<S> {
        let mut vecs = Vec::new();
        for u in s.basis_vectors() {
            let ua = self.prod(&u, a);
            for v in t.basis_vectors() {
                vecs.push(self.prod(&ua, &v).coords);
            }
        }
        Subspace::from_vectors(self.dim, vecs)
    }

    pub fn into_handle(self) -> AlgebraHandle<S> {
        Arc::new(self)
    }
}
