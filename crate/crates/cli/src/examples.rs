//! The built-in example registry. Each entry writes an algebra file and a
//! verified twist file (plus extras where useful) into the output
//! directory, ready to feed back into the other subcommands.

use std::path::Path;

use serde_json::json;

use ytwist_core::io::{self, FieldKind};
use ytwist_core::mat::Mat;
use ytwist_core::scalar::{QField, Scalar};
use ytwist_core::twist::GammaFamily;
use ytwist_core::{Algebra, Element, LinMap, Rat};

use crate::Cli;

pub const NAMES: &[&str] = &["kxk-m2", "ore-n2", "truncpoly-m4n3", "m2q-ladder", "q-zeta5"];

pub fn write_example(cli: &Cli, name: &str, out_dir: &Path) -> Result<u8, String> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let files = match name {
        "kxk-m2" => kxk_m2(out_dir)?,
        "ore-n2" => ore_n2(out_dir)?,
        "truncpoly-m4n3" => truncpoly_m4n3(out_dir)?,
        "m2q-ladder" => m2q_ladder(out_dir)?,
        "q-zeta5" => q_zeta5(out_dir)?,
        other => {
            return Err(format!(
                "unknown example {other:?}; available: {}",
                NAMES.join(", ")
            ))
        }
    };
    let report = json!({ "example": name, "files": files });
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    } else {
        println!("wrote {}", files.join(", "));
    }
    Ok(0)
}

fn q(n: i64) -> Rat {
    Rat::from_i64(QField, n)
}

fn write(
    out_dir: &Path,
    name: &str,
    value: &serde_json::Value,
    files: &mut Vec<String>,
) -> Result<(), String> {
    let path = out_dir.join(name);
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(&path, text + "\n").map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    files.push(path.display().to_string());
    Ok(())
}

fn emit_pair(
    out_dir: &Path,
    name: &str,
    alg: &Algebra<Rat>,
    fam: &GammaFamily<Rat>,
) -> Result<Vec<String>, String> {
    let mut files = Vec::new();
    let alg_file = format!("{name}.algebra.json");
    write(out_dir, &alg_file, &io::algebra_to_json(alg, FieldKind::Q), &mut files)?;
    write(
        out_dir,
        &format!("{name}.twist.json"),
        &io::twist_to_json(fam, Some(&alg_file)),
        &mut files,
    )?;
    Ok(files)
}

/// `A = Q x Q`, `B = Q(1,1)`, `h = n = 2`: the simple extension
/// isomorphic to `M_2(Q)`.
fn kxk_m2(out_dir: &Path) -> Result<Vec<String>, String> {
    let alg = Algebra::split_product(QField, 2);
    let half = Rat::ratio(QField, 1, 2);
    let g0 = LinMap::new(Mat::from_rows(vec![
        vec![half.clone(), -half.clone()],
        vec![half.clone(), -half],
    ]));
    let g1 = LinMap::new(Mat::from_rows(vec![
        vec![q(0), q(1)],
        vec![q(1), q(0)],
    ]));
    let fam = GammaFamily::derive(alg.clone().into_handle(), vec![g0, g1])
        .map_err(|e| e.to_string())?;
    let mut files = emit_pair(out_dir, "kxk-m2", &alg, &fam)?;
    let classifier = json!({
        "algebra": "kxk-m2.algebra.json",
        "B_basis": [["1", "1"]],
        "free_basis": [["1", "1"], ["1", "-1"]],
        "n": 2,
        "g": [],
    });
    write(out_dir, "kxk-m2.classifier.json", &classifier, &mut files)?;
    Ok(files)
}

/// Lower-triangular pair on the dual numbers: `σ(x) = -x`, `δ(x) = 1`,
/// truncating at `n = 2`.
fn ore_n2(out_dir: &Path) -> Result<Vec<String>, String> {
    let alg = Algebra::truncated_polynomial(QField, 2);
    let sigma = LinMap::new(Mat::from_rows(vec![vec![q(1), q(0)], vec![q(0), q(-1)]]));
    let delta = LinMap::new(Mat::from_rows(vec![vec![q(0), q(1)], vec![q(0), q(0)]]));
    let fam = ytwist_core::twist::ore_truncated(alg.clone().into_handle(), &sigma, &delta, 2)
        .map_err(|e| e.to_string())?;
    emit_pair(out_dir, "ore-n2", &alg, &fam)
}

/// `k[x]/<x^4>` with `γ^1_1(x) = x^2`, `γ^1_2(x) = x^3` at `n = 3`, plus
/// the spec file the `truncpoly` subcommand consumes.
fn truncpoly_m4n3(out_dir: &Path) -> Result<Vec<String>, String> {
    let p1 = Element::new(vec![q(0), q(0), q(1), q(0)]);
    let p2 = Element::new(vec![q(0), q(0), q(0), q(1)]);
    let fam = ytwist_core::obstruction::truncpoly_build(QField, 4, &[p1, p2])
        .map_err(|e| e.to_string())?;
    let alg = fam.algebra().as_ref().clone();
    let mut files = emit_pair(out_dir, "truncpoly-m4n3", &alg, &fam)?;
    let spec = json!({
        "m": 4,
        "n": 3,
        "P": [["0", "0", "1", "0"], ["0", "0", "0", "1"]],
    });
    write(out_dir, "truncpoly-m4n3.spec.json", &spec, &mut files)?;
    Ok(files)
}

/// `M_2(Q)` with the flip at `n = 2`: the start of the obstruction ladder
/// (`H^2 = 0`, so `extend` succeeds indefinitely).
fn m2q_ladder(out_dir: &Path) -> Result<Vec<String>, String> {
    let alg = Algebra::matrix_algebra(QField, 2);
    let fam = GammaFamily::flip(alg.clone().into_handle(), 2);
    emit_pair(out_dir, "m2q-ladder", &alg, &fam)
}

/// `Q[t]/<1 + t + t^2 + t^3 + t^4>` (the field `Q(ζ_5)`) with the Galois
/// map `t -> t^2` as `γ^1_1`, plus a pin file for `extend --pins`.
fn q_zeta5(out_dir: &Path) -> Result<Vec<String>, String> {
    let coeffs: Vec<Rat> = (0..5).map(|_| q(1)).collect();
    let alg = Algebra::quotient_polynomial(QField, &coeffs);
    let handle = alg.clone().into_handle();
    let t = handle.basis_element(1);
    let images = (0..4)
        .map(|k| {
            let mut acc = handle.unit();
            for _ in 0..(2 * k) {
                acc = handle.prod(&acc, &t);
            }
            acc
        })
        .collect();
    let alpha = LinMap::from_images(images);
    let fam = GammaFamily::derive(handle.clone(), vec![LinMap::zero(4), alpha])
        .map_err(|e| e.to_string())?;
    let mut files = emit_pair(out_dir, "q-zeta5", &alg, &fam)?;
    let pins = json!([{ "b": ["0", "1", "0", "0"], "a": ["0", "0", "1", "0"] }]);
    write(out_dir, "q-zeta5.pins.json", &pins, &mut files)?;
    Ok(files)
}
