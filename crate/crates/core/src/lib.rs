//! Exact-arithmetic library for twisted truncated polynomial extensions
//! `A ⊗_s k[y]/<y^n>` of finite-dimensional associative algebras.
//!
//! The crate builds the coefficient-map calculus of a twisting map
//! (`twist`), analyzes its kernel/freeness structure (`structure`),
//! constructs the maps classified by a central kernel subalgebra
//! (`classifier`), and runs the Hochschild-cohomology obstruction calculus
//! for upper triangular extensions (`obstruction`). All computation is over
//! an exact field, rational by default; see [`scalar`].
//!
//! ```
//! use ytwist_core::{Algebra, GammaFamily, QField, Rat};
//! use ytwist_core::obstruction::extend_step;
//!
//! let m2 = Algebra::<Rat>::matrix_algebra(QField, 2).into_handle();
//! let flip = GammaFamily::flip(m2, 2);
//! let s3 = extend_step(&flip, &[]).unwrap();
//! assert!(s3.verify_twisting().pass());
//! ```

#![allow(clippy::needless_range_loop)] // index loops mirror the formulas

pub mod algebra;
pub mod classifier;
pub mod io;
pub mod mat;
pub mod obstruction;
pub mod scalar;
pub mod structure;
pub mod twist;

pub use algebra::{Algebra, AlgebraError, AlgebraHandle, Element, LinMap, Subspace};
pub use classifier::{ClassifierInput, ClassifierSimplicity};
pub use obstruction::{ObstructionReport, TrivializationState, TwistedBimodule};
pub use scalar::{Fp, FpField, QField, Scalar, ScalarError};
pub use structure::{FreenessBasis, StructureReport};
pub use twist::{GammaFamily, Simplicity, TwistedAlgebra, Verdict};

/// Arbitrary-precision rational scalar, the default field.
pub type Rat = num::BigRational;

pub type QAlgebra = Algebra<Rat>;
pub type QElement = Element<Rat>;
pub type QLinMap = LinMap<Rat>;

pub type FpAlgebra = Algebra<Fp>;
pub type FpElement = Element<Fp>;
pub type FpLinMap = LinMap<Fp>;
