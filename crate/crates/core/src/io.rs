//! JSON interchange formats.
//!
//! Scalars are serialized as strings (`"3"`, `"1/2"`) so exactness survives
//! the round trip; readers also accept plain JSON integers. Matrices are
//! row-major, `mat[r][c]` being the coefficient of basis element `r` in the
//! image of basis element `c` (columns are images).

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError, AlgebraHandle, Element, LinMap, Subspace};
use crate::classifier::ClassifierInput;
use crate::mat::Mat;
use crate::obstruction::ObstructionReport;
use crate::scalar::{Scalar, ScalarError};
use crate::structure::StructureReport;
use crate::twist::{GammaFamily, Verdict};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("field mismatch: file declares {file}, session uses {session}")]
    FieldMismatch { file: String, session: String },
    #[error("cross-reference error: {0}")]
    CrossRef(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// The ground field named by a file, before a concrete scalar type is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Q,
    Fp(u64),
}

impl std::fmt::Display for FieldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldKind::Q => write!(f, "Q"),
            FieldKind::Fp(p) => write!(f, "Fp:{p}"),
        }
    }
}

pub fn field_kind_of(v: &Value) -> Result<FieldKind, IoError> {
    match v.get("field") {
        Some(Value::String(s)) if s == "Q" => Ok(FieldKind::Q),
        Some(Value::Object(map)) => match map.get("Fp") {
            Some(p) => Ok(FieldKind::Fp(p.as_u64().ok_or_else(|| {
                IoError::Malformed("Fp modulus must be a positive integer".into())
            })?)),
            None => Err(IoError::Malformed("unknown field object".into())),
        },
        Some(other) => Err(IoError::Malformed(format!("unknown field {other}"))),
        None => Err(IoError::Malformed("missing \"field\"".into())),
    }
}

fn field_kind_json(kind: FieldKind) -> Value {
    match kind {
        FieldKind::Q => json!("Q"),
        FieldKind::Fp(p) => json!({ "Fp": p }),
    }
}

fn scalar_from_json<S: Scalar>(field: S::Field, v: &Value) -> Result<S, IoError> {
    match v {
        Value::Number(n) => {
            let text = n.to_string();
            Ok(S::parse(field, &text)?)
        }
        Value::String(s) => Ok(S::parse(field, s)?),
        other => Err(IoError::Malformed(format!("expected scalar, got {other}"))),
    }
}

fn scalar_to_json<S: Scalar>(s: &S) -> Value {
    Value::String(s.render())
}

fn vector_from_json<S: Scalar>(field: S::Field, v: &Value, dim: usize) -> Result<Vec<S>, IoError> {
    let arr = v
        .as_array()
        .ok_or_else(|| IoError::Malformed(format!("expected array, got {v}")))?;
    if arr.len() != dim {
        return Err(IoError::Malformed(format!(
            "expected vector of length {dim}, got {}",
            arr.len()
        )));
    }
    arr.iter().map(|x| scalar_from_json(field, x)).collect()
}

fn vector_to_json<S: Scalar>(v: &[S]) -> Value {
    Value::Array(v.iter().map(scalar_to_json).collect())
}

fn matrix_from_json<S: Scalar>(field: S::Field, v: &Value, dim: usize) -> Result<Mat<S>, IoError> {
    let rows = v
        .as_array()
        .ok_or_else(|| IoError::Malformed("expected matrix".into()))?;
    if rows.len() != dim {
        return Err(IoError::Malformed(format!(
            "expected {dim} matrix rows, got {}",
            rows.len()
        )));
    }
    let mut data = Vec::with_capacity(dim * dim);
    for row in rows {
        data.extend(vector_from_json::<S>(field, row, dim)?);
    }
    Ok(Mat::from_rows(
        data.chunks(dim).map(|c| c.to_vec()).collect(),
    ))
}

fn matrix_to_json<S: Scalar>(m: &Mat<S>) -> Value {
    Value::Array((0..m.rows()).map(|r| vector_to_json(m.row(r))).collect())
}

pub fn algebra_to_json<S: Scalar>(alg: &Algebra<S>, kind: FieldKind) -> Value {
    let d = alg.dim();
    let mul = Value::Array(
        (0..d)
            .map(|i| {
                Value::Array(
                    (0..d)
                        .map(|j| vector_to_json(&alg.mul_table()[i][j]))
                        .collect(),
                )
            })
            .collect(),
    );
    json!({
        "field": field_kind_json(kind),
        "dim": d,
        "basis": alg.basis_names(),
        "unit": vector_to_json(&alg.unit().coords),
        "mul": mul,
    })
}

pub fn algebra_from_json<S: Scalar>(field: S::Field, v: &Value) -> Result<Algebra<S>, IoError> {
    let dim = v
        .get("dim")
        .and_then(Value::as_u64)
        .ok_or_else(|| IoError::Malformed("missing \"dim\"".into()))? as usize;
    let basis: Vec<String> = match v.get("basis") {
        Some(Value::Array(items)) => items
            .iter()
            .map(|x| {
                x.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| IoError::Malformed("basis names must be strings".into()))
            })
            .collect::<Result<_, _>>()?,
        None => (0..dim).map(|i| format!("e{i}")).collect(),
        _ => return Err(IoError::Malformed("\"basis\" must be an array".into())),
    };
    if basis.len() != dim {
        return Err(IoError::Malformed(format!(
            "basis has {} names for dimension {dim}",
            basis.len()
        )));
    }
    let unit = vector_from_json::<S>(
        field,
        v.get("unit")
            .ok_or_else(|| IoError::Malformed("missing \"unit\"".into()))?,
        dim,
    )?;
    let mul_value = v
        .get("mul")
        .and_then(Value::as_array)
        .ok_or_else(|| IoError::Malformed("missing \"mul\"".into()))?;
    if mul_value.len() != dim {
        return Err(IoError::Malformed("mul table has the wrong shape".into()));
    }
    let mut mul = Vec::with_capacity(dim);
    for row in mul_value {
        let cells = row
            .as_array()
            .ok_or_else(|| IoError::Malformed("mul table has the wrong shape".into()))?;
        if cells.len() != dim {
            return Err(IoError::Malformed("mul table has the wrong shape".into()));
        }
        let mut out_row = Vec::with_capacity(dim);
        for cell in cells {
            out_row.push(vector_from_json::<S>(field, cell, dim)?);
        }
        mul.push(out_row);
    }
    Ok(Algebra::new(field, basis, mul, unit)?)
}

pub fn twist_to_json<S: Scalar>(fam: &GammaFamily<S>, algebra_ref: Option<&str>) -> Value {
    let mut map = Map::new();
    if let Some(r) = algebra_ref {
        map.insert("algebra".into(), json!(r));
    }
    map.insert("n".into(), json!(fam.n()));
    map.insert(
        "gamma1".into(),
        Value::Array(fam.gamma1().iter().map(|g| matrix_to_json(&g.mat)).collect()),
    );
    Value::Object(map)
}

pub fn twist_algebra_ref(v: &Value) -> Option<String> {
    v.get("algebra").and_then(Value::as_str).map(str::to_string)
}

/// Parses just the first-row maps, without deriving the table; callers that
/// want to report unit-law violations as verification failures go through
/// this and run [`GammaFamily::derive`] themselves.
pub fn twist_gamma1_from_json<S: Scalar>(
    alg: &AlgebraHandle<S>,
    v: &Value,
) -> Result<Vec<LinMap<S>>, IoError> {
    let n = v
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| IoError::Malformed("missing \"n\"".into()))? as usize;
    let mats = v
        .get("gamma1")
        .and_then(Value::as_array)
        .ok_or_else(|| IoError::Malformed("missing \"gamma1\"".into()))?;
    if mats.len() != n {
        return Err(IoError::CrossRef(format!(
            "twist declares n = {n} but provides {} first-row maps",
            mats.len()
        )));
    }
    let d = alg.dim();
    mats.iter()
        .map(|m| matrix_from_json::<S>(alg.field(), m, d).map(LinMap::new))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| match e {
            IoError::Malformed(msg) => {
                IoError::CrossRef(format!("twist maps do not match algebra dimension {d}: {msg}"))
            }
            other => other,
        })
}

pub fn twist_from_json<S: Scalar>(
    alg: &AlgebraHandle<S>,
    v: &Value,
) -> Result<GammaFamily<S>, IoError> {
    let gamma1 = twist_gamma1_from_json(alg, v)?;
    GammaFamily::derive(alg.clone(), gamma1)
        .map_err(|e| IoError::CrossRef(format!("twist data rejected: {e}")))
}

pub fn classifier_algebra_ref(v: &Value) -> Option<String> {
    v.get("algebra").and_then(Value::as_str).map(str::to_string)
}

pub fn classifier_input_from_json<S: Scalar>(
    alg: &AlgebraHandle<S>,
    v: &Value,
) -> Result<ClassifierInput<S>, IoError> {
    let d = alg.dim();
    let field = alg.field();
    let b_rows = v
        .get("B_basis")
        .and_then(Value::as_array)
        .ok_or_else(|| IoError::Malformed("missing \"B_basis\"".into()))?;
    let b_vectors = b_rows
        .iter()
        .map(|row| vector_from_json::<S>(field, row, d))
        .collect::<Result<Vec<_>, _>>()?;
    let free_rows = v
        .get("free_basis")
        .and_then(Value::as_array)
        .ok_or_else(|| IoError::Malformed("missing \"free_basis\"".into()))?;
    let free_basis = free_rows
        .iter()
        .map(|row| vector_from_json::<S>(field, row, d).map(Element::new))
        .collect::<Result<Vec<_>, _>>()?;
    let n = v
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| IoError::Malformed("missing \"n\"".into()))? as usize;
    let g = match v.get("g") {
        Some(Value::Array(mats)) => mats
            .iter()
            .map(|m| matrix_from_json::<S>(field, m, d).map(LinMap::new))
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
        _ => return Err(IoError::Malformed("\"g\" must be an array".into())),
    };
    Ok(ClassifierInput {
        algebra: alg.clone(),
        b_basis: Subspace::from_vectors(d, b_vectors),
        free_basis,
        n,
        g,
    })
}

pub fn classifier_input_to_json<S: Scalar>(
    input: &ClassifierInput<S>,
    algebra_ref: Option<&str>,
) -> Value {
    let mut map = Map::new();
    if let Some(r) = algebra_ref {
        map.insert("algebra".into(), json!(r));
    }
    map.insert(
        "B_basis".into(),
        Value::Array(
            input
                .b_basis
                .basis_vectors()
                .iter()
                .map(|e| vector_to_json(&e.coords))
                .collect(),
        ),
    );
    map.insert(
        "free_basis".into(),
        Value::Array(
            input
                .free_basis
                .iter()
                .map(|e| vector_to_json(&e.coords))
                .collect(),
        ),
    );
    map.insert("n".into(), json!(input.n));
    map.insert(
        "g".into(),
        Value::Array(input.g.iter().map(|g| matrix_to_json(&g.mat)).collect()),
    );
    Value::Object(map)
}

/// `{"m": m, "n": n, "P": [coefficient vectors]}`.
pub fn truncpoly_from_json<S: Scalar>(
    field: S::Field,
    v: &Value,
) -> Result<(usize, Vec<Element<S>>), IoError> {
    let m = v
        .get("m")
        .and_then(Value::as_u64)
        .ok_or_else(|| IoError::Malformed("missing \"m\"".into()))? as usize;
    let p_rows = v
        .get("P")
        .and_then(Value::as_array)
        .ok_or_else(|| IoError::Malformed("missing \"P\"".into()))?;
    let p = p_rows
        .iter()
        .map(|row| vector_from_json::<S>(field, row, m).map(Element::new))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(n) = v.get("n").and_then(Value::as_u64) {
        if n as usize != p.len() + 1 {
            return Err(IoError::CrossRef(format!(
                "n = {n} does not match {} polynomials (need n = len(P) + 1)",
                p.len()
            )));
        }
    }
    Ok((m, p))
}

type PinList<S> = Vec<(Element<S>, Element<S>)>;

pub fn pins_from_json<S: Scalar>(
    field: S::Field,
    v: &Value,
    dim: usize,
) -> Result<PinList<S>, IoError> {
    let arr = v
        .as_array()
        .ok_or_else(|| IoError::Malformed("pins must be an array".into()))?;
    arr.iter()
        .map(|pin| {
            let b = pin
                .get("b")
                .ok_or_else(|| IoError::Malformed("pin missing \"b\"".into()))?;
            let a = pin
                .get("a")
                .ok_or_else(|| IoError::Malformed("pin missing \"a\"".into()))?;
            Ok((
                Element::new(vector_from_json::<S>(field, b, dim)?),
                Element::new(vector_from_json::<S>(field, a, dim)?),
            ))
        })
        .collect()
}

pub fn verdict_to_json(verdict: &Verdict) -> Value {
    json!({
        "pass": verdict.pass(),
        "violations": serde_json::to_value(&verdict.violations).expect("serializable"),
    })
}

pub fn structure_report_to_json<S: Scalar>(report: &StructureReport<S>) -> Value {
    json!({
        "h": report.h,
        "dim_B": report.b.dim(),
        "B_basis": report.b.basis_vectors().iter().map(|e| vector_to_json(&e.coords)).collect::<Vec<_>>(),
        "B_is_subalgebra": report.b_is_subalgebra,
        "B_central": report.b_central,
        "A1": if report.a1_verified { "verified" } else { "unverified" },
        "A2_holds": report.a2_holds,
        "h_divides_n": report.h_divides_n,
        "x": report.x.as_ref().map(|e| vector_to_json(&e.coords)),
        "q": report.q.as_ref().map(|e| vector_to_json(&e.coords)),
        "freeness_basis": report.freeness_basis.as_ref().map(|b| {
            b.iter().map(|e| vector_to_json(&e.coords)).collect::<Vec<_>>()
        }),
    })
}

pub fn obstruction_report_to_json<S: Scalar>(report: &ObstructionReport<S>) -> Value {
    json!({
        "cocycle_ok": report.cocycle_ok,
        "solvable": report.solvable,
        "h1": report.h1_dim,
        "h2": report.h2_dim,
        "gamma1_n": report.solution.as_ref().map(|g| matrix_to_json(&g.mat)),
    })
}
