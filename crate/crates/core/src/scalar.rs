//! Exact field scalars.
//!
//! All arithmetic in this crate happens over an exact field, either the
//! rationals (arbitrary precision, the default) or a prime field `F_p`.
//! The [`Scalar`] trait is what the rest of the crate is generic over;
//! equality is exact and there is no tolerance anywhere.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("cannot parse scalar from {0:?}")]
    Parse(String),
    #[error("denominator {0} is zero in the chosen field")]
    ZeroDenominator(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
}

/// An exact field element.
///
/// `Field` is the runtime descriptor of the field a value lives in: a unit
/// struct for `Q`, the modulus for `F_p`. Constructors that mint constants
/// (identity matrices, structure-constant tables, parsed files) take the
/// descriptor so every value stored in a long-lived structure knows its
/// field. `zero()`/`one()` may produce transient descriptor-less constants;
/// they bind to a field on first contact with a bound value.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
{
    type Field: Copy + PartialEq + fmt::Debug;

    fn from_i64(field: Self::Field, value: i64) -> Self;

    /// `num/den` in the field. Panics if `den` maps to zero.
    fn ratio(field: Self::Field, num: i64, den: i64) -> Self;

    /// Multiplicative inverse, `None` for zero.
    fn inv(&self) -> Option<Self>;

    /// The field this value is bound to, if any.
    fn field(&self) -> Option<Self::Field>;

    /// Parses the JSON text form: an optionally signed integer or `"a/b"`.
    fn parse(field: Self::Field, text: &str) -> Result<Self, ScalarError>;

    /// Canonical text form, inverse to [`Scalar::parse`].
    fn render(&self) -> String;

    fn div_exact(&self, rhs: &Self) -> Self {
        self.clone() * rhs.inv().expect("division by zero")
    }
}

/// Field descriptor for the rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QField;

impl Scalar for BigRational {
    type Field = QField;

    fn from_i64(_field: QField, value: i64) -> Self {
        BigRational::from_integer(value.into())
    }

    fn ratio(_field: QField, num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        BigRational::new(num.into(), den.into())
    }

    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.recip())
        }
    }

    fn field(&self) -> Option<QField> {
        Some(QField)
    }

    fn parse(_field: QField, text: &str) -> Result<Self, ScalarError> {
        let text = text.trim();
        match text.split_once('/') {
            Some((n, d)) => {
                let n: num::BigInt = n.trim().parse().map_err(|_| ScalarError::Parse(text.into()))?;
                let d: num::BigInt = d.trim().parse().map_err(|_| ScalarError::Parse(text.into()))?;
                if d.is_zero() {
                    return Err(ScalarError::ZeroDenominator(text.into()));
                }
                Ok(BigRational::new(n, d))
            }
            None => {
                let n: num::BigInt = text.parse().map_err(|_| ScalarError::Parse(text.into()))?;
                Ok(BigRational::from_integer(n))
            }
        }
    }

    fn render(&self) -> String {
        if self.denom().is_one() {
            self.numer().to_string()
        } else if self.denom().is_negative() {
            // keep the sign on the numerator
            format!("{}/{}", -self.numer(), -self.denom())
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

/// Field descriptor for `F_p`. Construction checks primality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FpField {
    p: u64,
}

impl FpField {
    pub fn new(p: u64) -> Result<Self, ScalarError> {
        if !is_prime(p) {
            return Err(ScalarError::NotPrime(p));
        }
        Ok(FpField { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p.is_multiple_of(2) {
        return p == 2;
    }
    let mut d = 3u64;
    while d.checked_mul(d).is_some_and(|dd| dd <= p) {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// An element of `F_p` with the modulus carried alongside the value.
///
/// `zero()`/`one()` cannot know a modulus, so small integer constants are
/// kept unbound until they first meet a bound value, at which point they
/// reduce. Long-lived data built through the crate's constructors is always
/// bound; unbound values only occur transiently inside fold loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FpRepr {
    Unbound(i64),
    Bound { v: u64, p: u64 },
}

#[derive(Debug, Clone, Copy)]
pub struct Fp {
    repr: FpRepr,
}

impl Fp {
    pub fn new(field: FpField, value: i64) -> Self {
        Fp {
            repr: FpRepr::Bound {
                v: value.rem_euclid(field.p as i64) as u64,
                p: field.p,
            },
        }
    }

    fn bind(self, p: u64) -> (u64, u64) {
        match self.repr {
            FpRepr::Unbound(v) => (v.rem_euclid(p as i64) as u64, p),
            FpRepr::Bound { v, p: q } => {
                assert_eq!(p, q, "mixed moduli {p} and {q}");
                (v, p)
            }
        }
    }

    pub fn value(&self) -> Option<u64> {
        match self.repr {
            FpRepr::Bound { v, .. } => Some(v),
            FpRepr::Unbound(_) => None,
        }
    }
}

impl PartialEq for Fp {
    fn eq(&self, other: &Self) -> bool {
        match (self.repr, other.repr) {
            (FpRepr::Unbound(a), FpRepr::Unbound(b)) => a == b,
            (FpRepr::Bound { p, .. }, _) => {
                let (a, _) = self.bind(p);
                let (b, _) = other.bind(p);
                a == b
            }
            (_, FpRepr::Bound { p, .. }) => {
                let (a, _) = self.bind(p);
                let (b, _) = other.bind(p);
                a == b
            }
        }
    }
}

impl Eq for Fp {}

fn fp_binop(a: Fp, b: Fp, f: impl Fn(u64, u64, u64) -> u64, g: impl Fn(i64, i64) -> i64) -> Fp {
    match (a.repr, b.repr) {
        (FpRepr::Unbound(x), FpRepr::Unbound(y)) => Fp {
            repr: FpRepr::Unbound(g(x, y)),
        },
        (FpRepr::Bound { p, .. }, _) | (_, FpRepr::Bound { p, .. }) => {
            let (x, _) = a.bind(p);
            let (y, _) = b.bind(p);
            Fp {
                repr: FpRepr::Bound { v: f(x, y, p), p },
            }
        }
    }
}

impl Add for Fp {
    type Output = Fp;
    fn add(self, rhs: Fp) -> Fp {
        fp_binop(
            self,
            rhs,
            |x, y, p| ((x as u128 + y as u128) % p as u128) as u64,
            |x, y| x.checked_add(y).expect("unbound overflow"),
        )
    }
}

impl Sub for Fp {
    type Output = Fp;
    fn sub(self, rhs: Fp) -> Fp {
        fp_binop(
            self,
            rhs,
            |x, y, p| ((x as u128 + (p - y) as u128) % p as u128) as u64,
            |x, y| x.checked_sub(y).expect("unbound overflow"),
        )
    }
}

impl Mul for Fp {
    type Output = Fp;
    fn mul(self, rhs: Fp) -> Fp {
        fp_binop(
            self,
            rhs,
            |x, y, p| ((x as u128 * y as u128) % p as u128) as u64,
            |x, y| x.checked_mul(y).expect("unbound overflow"),
        )
    }
}

impl Neg for Fp {
    type Output = Fp;
    fn neg(self) -> Fp {
        match self.repr {
            FpRepr::Unbound(v) => Fp {
                repr: FpRepr::Unbound(-v),
            },
            FpRepr::Bound { v, p } => Fp {
                repr: FpRepr::Bound {
                    v: if v == 0 { 0 } else { p - v },
                    p,
                },
            },
        }
    }
}

impl Zero for Fp {
    fn zero() -> Self {
        Fp {
            repr: FpRepr::Unbound(0),
        }
    }
    fn is_zero(&self) -> bool {
        match self.repr {
            FpRepr::Unbound(v) => v == 0,
            FpRepr::Bound { v, .. } => v == 0,
        }
    }
}

impl One for Fp {
    fn one() -> Self {
        Fp {
            repr: FpRepr::Unbound(1),
        }
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.repr {
            FpRepr::Unbound(v) => write!(f, "{v}"),
            FpRepr::Bound { v, .. } => write!(f, "{v}"),
        }
    }
}

fn mod_pow(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = ((acc as u128 * base as u128) % p as u128) as u64;
        }
        base = ((base as u128 * base as u128) % p as u128) as u64;
        exp >>= 1;
    }
    acc
}

impl Scalar for Fp {
    type Field = FpField;

    fn from_i64(field: FpField, value: i64) -> Self {
        Fp::new(field, value)
    }

    fn ratio(field: FpField, num: i64, den: i64) -> Self {
        let d = Fp::new(field, den);
        let inv = d.inv().expect("denominator is zero in F_p");
        Fp::new(field, num) * inv
    }

    fn inv(&self) -> Option<Self> {
        match self.repr {
            FpRepr::Unbound(1) => Some(*self),
            FpRepr::Unbound(-1) => Some(*self),
            FpRepr::Unbound(0) => None,
            FpRepr::Unbound(v) => panic!("cannot invert unbound constant {v} without a modulus"),
            FpRepr::Bound { v, p } => {
                if v == 0 {
                    None
                } else {
                    Some(Fp {
                        repr: FpRepr::Bound {
                            v: mod_pow(v, p - 2, p),
                            p,
                        },
                    })
                }
            }
        }
    }

    fn field(&self) -> Option<FpField> {
        match self.repr {
            FpRepr::Bound { p, .. } => Some(FpField { p }),
            FpRepr::Unbound(_) => None,
        }
    }

    fn parse(field: FpField, text: &str) -> Result<Self, ScalarError> {
        let text = text.trim();
        match text.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().map_err(|_| ScalarError::Parse(text.into()))?;
                let d: i64 = d.trim().parse().map_err(|_| ScalarError::Parse(text.into()))?;
                let den = Fp::new(field, d);
                let inv = den
                    .inv()
                    .ok_or_else(|| ScalarError::ZeroDenominator(text.into()))?;
                Ok(Fp::new(field, n) * inv)
            }
            None => {
                let n: i64 = text.parse().map_err(|_| ScalarError::Parse(text.into()))?;
                Ok(Fp::new(field, n))
            }
        }
    }

    fn render(&self) -> String {
        self.to_string()
    }
}
