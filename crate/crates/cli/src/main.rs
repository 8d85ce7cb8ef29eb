//! Command-line front end: loads algebra/twist/classifier/truncpoly JSON
//! files, runs the library pipelines, and emits human-readable summaries
//! plus machine JSON reports.
//!
//! Exit codes: 0 on success/Pass, 1 on a mathematical negative
//! (verification failure, obstruction, stuck trivialization), 2 on input
//! errors.

mod examples;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use ytwist_core::io::{self, FieldKind};
use ytwist_core::obstruction::ObstructionError;
use ytwist_core::scalar::{Fp, FpField, QField, Scalar};
use ytwist_core::structure::SearchConfig;
use ytwist_core::twist::Simplicity;
use ytwist_core::{AlgebraHandle, Element, LinMap, Rat};

#[derive(Parser)]
#[command(name = "ytwist", version, about = "Exact twisting maps on truncated polynomial extensions")]
struct Cli {
    /// Ground field: `Q` or `Fp:<prime>`; checked against input files when
    /// given, used for generated ones (default `Q`).
    #[arg(long, global = true)]
    field: Option<String>,
    /// Seed for the witness search in `analyze`.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Write the machine JSON report to this path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the machine JSON to stdout instead of the human summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate a structure-constant algebra file.
    Validate { algebra: PathBuf },
    /// Check the twisting-map laws for a first-row family.
    Verify { algebra: PathBuf, twist: PathBuf },
    /// Structure analysis: nilpotency index, kernel subalgebra, witness,
    /// freeness data.
    Analyze { algebra: PathBuf, twist: PathBuf },
    /// Build the unique twisting map from a classifier input file.
    Classify {
        input: PathBuf,
        /// Algebra file; defaults to the input's "algebra" reference.
        #[arg(long)]
        algebra: Option<PathBuf>,
    },
    /// Extend an upper triangular family by one degree, or iterate the
    /// steps up to a degree bound (the finite-stage view of a formal
    /// extension).
    Extend {
        twist: PathBuf,
        #[arg(long)]
        algebra: Option<PathBuf>,
        /// JSON file `[{"b": [...], "a": [...]}, ...]` of pinned values,
        /// applied to the first step only.
        #[arg(long)]
        pins: Option<PathBuf>,
        /// Iterate extension steps until this order is reached (>= 2).
        #[arg(long)]
        degree_bound: Option<usize>,
    },
    /// Build the unique upper triangular family on `k[x]/<x^m>` from a
    /// truncpoly spec file.
    Truncpoly {
        spec: PathBuf,
        /// Where to write the generated algebra (defaults next to --out).
        #[arg(long)]
        algebra_out: Option<PathBuf>,
    },
    /// Solve the degree-by-degree change of variable to the trivial
    /// extension.
    Trivialize {
        twist: PathBuf,
        #[arg(long)]
        algebra: Option<PathBuf>,
    },
    /// Hochschild H^1/H^2 dimensions for the twisted coefficient bimodule.
    Cohomology {
        algebra: PathBuf,
        /// Matrix JSON file for alpha, or "id".
        #[arg(long, default_value = "id")]
        alpha: String,
        #[arg(long)]
        n: usize,
    },
    /// Write one of the built-in examples to disk.
    Example {
        name: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn parse_field(text: &str) -> Result<FieldKind, String> {
    if text == "Q" {
        return Ok(FieldKind::Q);
    }
    if let Some(p) = text.strip_prefix("Fp:") {
        let p: u64 = p.parse().map_err(|_| format!("bad modulus in {text:?}"))?;
        return Ok(FieldKind::Fp(p));
    }
    Err(format!("unknown field {text:?}; use Q or Fp:<prime>"))
}

fn load_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(cli: &Cli, report: &Value, human: &str) -> Result<(), String> {
    if let Some(path) = &cli.out {
        let text = serde_json::to_string_pretty(report).expect("serializable");
        std::fs::write(path, text + "\n")
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    if cli.json {
        println!("{}", serde_json::to_string_pretty(report).expect("serializable"));
    } else {
        println!("{human}");
    }
    Ok(())
}

fn write_json(path: &Path, value: &Value) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Checks the file's declared field against the session's `--field` when
/// the latter was given explicitly, and returns the file's field.
fn algebra_field(cli: &Cli, v: &Value) -> Result<FieldKind, String> {
    let file_kind = io::field_kind_of(v).map_err(|e| e.to_string())?;
    if let Some(requested) = &cli.field {
        let session = parse_field(requested)?;
        if file_kind != session {
            return Err(format!(
                "file declares field {file_kind}, session requested {session}"
            ));
        }
    }
    Ok(file_kind)
}

fn run(cli: &Cli) -> Result<u8, String> {
    match &cli.command {
        Command::Validate { algebra } => {
            let v = load_json(algebra)?;
            match algebra_field(cli, &v)? {
                FieldKind::Q => validate_cmd::<Rat>(cli, QField, &v),
                FieldKind::Fp(p) => {
                    let f = FpField::new(p).map_err(|e| e.to_string())?;
                    validate_cmd::<Fp>(cli, f, &v)
                }
            }
        }
        Command::Verify { algebra, twist } => {
            let av = load_json(algebra)?;
            let tv = load_json(twist)?;
            match algebra_field(cli, &av)? {
                FieldKind::Q => verify_cmd::<Rat>(cli, QField, &av, &tv),
                FieldKind::Fp(p) => {
                    let f = FpField::new(p).map_err(|e| e.to_string())?;
                    verify_cmd::<Fp>(cli, f, &av, &tv)
                }
            }
        }
        Command::Analyze { algebra, twist } => {
            let av = load_json(algebra)?;
            let tv = load_json(twist)?;
            match algebra_field(cli, &av)? {
                FieldKind::Q => analyze_cmd::<Rat>(cli, QField, &av, &tv),
                FieldKind::Fp(p) => {
                    let f = FpField::new(p).map_err(|e| e.to_string())?;
                    analyze_cmd::<Fp>(cli, f, &av, &tv)
                }
            }
        }
        Command::Classify { input, algebra } => {
            let iv = load_json(input)?;
            let apath = resolve_ref(input, algebra.as_deref(), io::classifier_algebra_ref(&iv))?;
            let av = load_json(&apath)?;
            match algebra_field(cli, &av)? {
                FieldKind::Q => classify_cmd::<Rat>(cli, QField, &av, &iv, &apath),
                FieldKind::Fp(p) => {
                    let f = FpField::new(p).map_err(|e| e.to_string())?;
                    classify_cmd::<Fp>(cli, f, &av, &iv, &apath)
                }
            }
        }
        Command::Extend {
            twist,
            algebra,
            pins,
            degree_bound,
        } => {
            if let Some(bound) = degree_bound {
                if *bound < 2 {
                    return Err("degree bound must be at least 2".into());
                }
            }
            let tv = load_json(twist)?;
            let apath = resolve_ref(twist, algebra.as_deref(), io::twist_algebra_ref(&tv))?;
            let av = load_json(&apath)?;
            let pv = pins.as_ref().map(|p| load_json(p)).transpose()?;
            match algebra_field(cli, &av)? {
                FieldKind::Q => {
                    extend_cmd::<Rat>(cli, QField, &av, &tv, pv.as_ref(), *degree_bound, &apath)
                }
                FieldKind::Fp(p) => {
                    let f = FpField::new(p).map_err(|e| e.to_string())?;
                    extend_cmd::<Fp>(cli, f, &av, &tv, pv.as_ref(), *degree_bound, &apath)
                }
            }
        }
        Command::Truncpoly { spec, algebra_out } => {
            let sv = load_json(spec)?;
            match parse_field(cli.field.as_deref().unwrap_or("Q"))? {
                FieldKind::Q => truncpoly_cmd::<Rat>(cli, QField, &sv, algebra_out.as_deref()),
                FieldKind::Fp(p) => {
                    let f = FpField::new(p).map_err(|e| e.to_string())?;
                    truncpoly_cmd::<Fp>(cli, f, &sv, algebra_out.as_deref())
                }
            }
        }
        Command::Trivialize { twist, algebra } => {
            let tv = load_json(twist)?;
            let apath = resolve_ref(twist, algebra.as_deref(), io::twist_algebra_ref(&tv))?;
            let av = load_json(&apath)?;
            match algebra_field(cli, &av)? {
                FieldKind::Q => trivialize_cmd::<Rat>(cli, QField, &av, &tv),
                FieldKind::Fp(p) => {
                    let f = FpField::new(p).map_err(|e| e.to_string())?;
                    trivialize_cmd::<Fp>(cli, f, &av, &tv)
                }
            }
        }
        Command::Cohomology { algebra, alpha, n } => {
            let av = load_json(algebra)?;
            match algebra_field(cli, &av)? {
                FieldKind::Q => cohomology_cmd::<Rat>(cli, QField, &av, alpha, *n),
                FieldKind::Fp(p) => {
                    let f = FpField::new(p).map_err(|e| e.to_string())?;
                    cohomology_cmd::<Fp>(cli, f, &av, alpha, *n)
                }
            }
        }
        Command::Example { name, out_dir } => examples::write_example(cli, name, out_dir),
    }
}

/// Resolves a referenced algebra path: explicit flag wins, otherwise the
/// file's own "algebra" field relative to the referencing file.
fn resolve_ref(
    base_file: &Path,
    explicit: Option<&Path>,
    reference: Option<String>,
) -> Result<PathBuf, String> {
    if let Some(p) = explicit {
        return Ok(p.to_path_buf());
    }
    match reference {
        Some(r) => {
            let r = PathBuf::from(r);
            if r.is_absolute() {
                Ok(r)
            } else {
                Ok(base_file.parent().unwrap_or(Path::new(".")).join(r))
            }
        }
        None => Err(format!(
            "{} has no \"algebra\" reference; pass --algebra",
            base_file.display()
        )),
    }
}

fn validate_cmd<S: Scalar>(cli: &Cli, field: S::Field, av: &Value) -> Result<u8, String> {
    let alg: ytwist_core::Algebra<S> =
        io::algebra_from_json(field, av).map_err(|e| e.to_string())?;
    let report = json!({
        "valid": true,
        "dim": alg.dim(),
        "basis": alg.basis_names(),
        "center_dim": alg.center().dim(),
    });
    emit(
        cli,
        &report,
        &format!(
            "algebra valid: dim {}, center dim {}",
            alg.dim(),
            alg.center().dim()
        ),
    )?;
    Ok(0)
}

fn load_family<S: Scalar>(
    field: S::Field,
    av: &Value,
    tv: &Value,
) -> Result<(AlgebraHandle<S>, ytwist_core::twist::GammaFamily<S>), String> {
    let alg = io::algebra_from_json::<S>(field, av)
        .map_err(|e| e.to_string())?
        .into_handle();
    let fam = io::twist_from_json(&alg, tv).map_err(|e| e.to_string())?;
    Ok((alg, fam))
}

fn verify_cmd<S: Scalar>(
    cli: &Cli,
    field: S::Field,
    av: &Value,
    tv: &Value,
) -> Result<u8, String> {
    use ytwist_core::twist::{GammaFamily, TwistError, Verdict, Violation};
    let alg = io::algebra_from_json::<S>(field, av)
        .map_err(|e| e.to_string())?
        .into_handle();
    let gamma1 = io::twist_gamma1_from_json(&alg, tv).map_err(|e| e.to_string())?;
    // a broken unit law is a failed twisting-map law, not a malformed file
    let verdict = match GammaFamily::derive(alg.clone(), gamma1.clone()) {
        Ok(fam) => fam.verify_twisting(),
        Err(TwistError::UnitLawViolated(j)) => {
            let got = gamma1[j].apply(&alg.unit());
            let want = if j == 1 {
                alg.unit()
            } else {
                Element::zero(alg.dim())
            };
            Verdict {
                violations: vec![Violation {
                    law: "unit-law".into(),
                    indices: vec![j],
                    lhs: got.coords.iter().map(|c| c.render()).collect(),
                    rhs: want.coords.iter().map(|c| c.render()).collect(),
                }],
            }
        }
        Err(other) => return Err(other.to_string()),
    };
    let report = io::verdict_to_json(&verdict);
    if verdict.pass() {
        emit(
            cli,
            &report,
            &format!("PASS: twisting map verified at n = {}", gamma1.len()),
        )?;
        Ok(0)
    } else {
        let first = verdict.first().expect("non-empty violations");
        emit(
            cli,
            &report,
            &format!(
                "FAIL: {} violation(s); first: {} at {:?}",
                verdict.violations.len(),
                first.law,
                first.indices
            ),
        )?;
        Ok(1)
    }
}

fn analyze_cmd<S: Scalar>(
    cli: &Cli,
    field: S::Field,
    av: &Value,
    tv: &Value,
) -> Result<u8, String> {
    let (_, fam) = load_family::<S>(field, av, tv)?;
    let config = SearchConfig {
        seed: cli.seed,
        attempts: 200,
    };
    let report = ytwist_core::structure::analyze_with(&fam, &config);
    let simplicity = ytwist_core::twist::build_twisted_algebra(&fam)
        .ok()
        .map(|tw| match ytwist_core::twist::simplicity_test(&tw) {
            Simplicity::Simple => "simple",
            Simplicity::NotSimple { .. } => "not-simple",
            Simplicity::NecessaryConditionOnly => "necessary-condition-only",
        });
    let mut rv = io::structure_report_to_json(&report);
    rv["simplicity"] = json!(simplicity);
    let human = format!(
        "h = {:?}, dim B = {}, A1 {}, A2 {}, h | n: {}, simplicity: {}",
        report.h,
        report.b.dim(),
        if report.a1_verified { "verified" } else { "unverified" },
        if report.a2_holds { "holds" } else { "fails" },
        report.h_divides_n,
        simplicity.unwrap_or("unavailable"),
    );
    emit(cli, &rv, &human)?;
    Ok(0)
}

fn classify_cmd<S: Scalar>(
    cli: &Cli,
    field: S::Field,
    av: &Value,
    iv: &Value,
    apath: &Path,
) -> Result<u8, String> {
    let alg = io::algebra_from_json::<S>(field, av)
        .map_err(|e| e.to_string())?
        .into_handle();
    let input = io::classifier_input_from_json(&alg, iv).map_err(|e| e.to_string())?;
    let fam = ytwist_core::classifier::classify_construct(&input).map_err(|e| e.to_string())?;
    let twist = io::twist_to_json(&fam, apath.file_name().and_then(|s| s.to_str()));
    emit(
        cli,
        &twist,
        &format!(
            "classified: twisting map at n = {} on a dim-{} algebra (h = {})",
            fam.n(),
            alg.dim(),
            input.h()
        ),
    )?;
    Ok(0)
}

fn extend_cmd<S: Scalar>(
    cli: &Cli,
    field: S::Field,
    av: &Value,
    tv: &Value,
    pins: Option<&Value>,
    degree_bound: Option<usize>,
    apath: &Path,
) -> Result<u8, String> {
    let (alg, fam) = load_family::<S>(field, av, tv)?;
    let pins = match pins {
        Some(v) => io::pins_from_json::<S>(alg.field(), v, alg.dim()).map_err(|e| e.to_string())?,
        None => Vec::new(),
    };
    let target = degree_bound.unwrap_or(fam.n() + 1);
    let mut current = fam;
    let mut first_step = true;
    while current.n() < target {
        let step_pins = if first_step { pins.as_slice() } else { &[] };
        match ytwist_core::obstruction::extend_step(&current, step_pins) {
            Ok(extended) => current = extended,
            Err(ObstructionError::Obstructed(report)) => {
                let mut rv = io::obstruction_report_to_json(&report);
                rv["reached_n"] = json!(current.n());
                emit(
                    cli,
                    &rv,
                    &format!(
                        "OBSTRUCTED at n = {}: [F] != 0 in H^2 (dim H^2 = {}, dim H^1 = {})",
                        current.n(),
                        report.h2_dim,
                        report.h1_dim
                    ),
                )?;
                return Ok(1);
            }
            Err(other) => return Err(other.to_string()),
        }
        first_step = false;
    }
    let twist = io::twist_to_json(&current, apath.file_name().and_then(|s| s.to_str()));
    emit(cli, &twist, &format!("extended to n = {}", current.n()))?;
    Ok(0)
}

fn truncpoly_cmd<S: Scalar>(
    cli: &Cli,
    field: S::Field,
    sv: &Value,
    algebra_out: Option<&Path>,
) -> Result<u8, String> {
    let (m, p) = io::truncpoly_from_json::<S>(field, sv).map_err(|e| e.to_string())?;
    let fam = ytwist_core::obstruction::truncpoly_build(field, m, &p).map_err(|e| e.to_string())?;
    let kind = parse_field(cli.field.as_deref().unwrap_or("Q"))?;
    let algebra_path = match (algebra_out, &cli.out) {
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(out)) => Some(out.with_extension("algebra.json")),
        (None, None) => None,
    };
    if let Some(apath) = &algebra_path {
        write_json(apath, &io::algebra_to_json(fam.algebra().as_ref(), kind))?;
    }
    let aref = algebra_path
        .as_ref()
        .and_then(|p| p.file_name())
        .and_then(|s| s.to_str())
        .map(str::to_string);
    let twist = io::twist_to_json(&fam, aref.as_deref());
    emit(
        cli,
        &twist,
        &format!(
            "built the unique upper triangular family on k[x]/<x^{m}> at n = {}",
            fam.n()
        ),
    )?;
    Ok(0)
}

fn trivialize_cmd<S: Scalar>(
    cli: &Cli,
    field: S::Field,
    av: &Value,
    tv: &Value,
) -> Result<u8, String> {
    let (_, fam) = load_family::<S>(field, av, tv)?;
    match ytwist_core::obstruction::trivialize(&fam) {
        Ok(state) => {
            let coeffs: Vec<Value> = state
                .a_seq
                .iter()
                .map(|e| Value::Array(e.coords.iter().map(|c| json!(c.render())).collect()))
                .collect();
            let rv = json!({
                "trivializable": true,
                "degree": state.degree,
                "coefficients": coeffs,
            });
            emit(
                cli,
                &rv,
                &format!(
                    "trivializable up to degree {}: {} change-of-variable coefficients",
                    state.degree,
                    state.a_seq.len()
                ),
            )?;
            Ok(0)
        }
        Err(ObstructionError::StuckAt { degree, witness }) => {
            let rv = json!({
                "trivializable": false,
                "stuck_at": degree,
                "witness": (0..witness.dim()).map(|r| {
                    Value::Array((0..witness.dim()).map(|c| json!(witness.mat.at(r, c).render())).collect())
                }).collect::<Vec<_>>(),
            });
            emit(
                cli,
                &rv,
                &format!("STUCK at degree {degree}: a non-inner derivation class remains"),
            )?;
            Ok(1)
        }
        Err(other) => Err(other.to_string()),
    }
}

fn cohomology_cmd<S: Scalar>(
    cli: &Cli,
    field: S::Field,
    av: &Value,
    alpha: &str,
    n: usize,
) -> Result<u8, String> {
    let alg = io::algebra_from_json::<S>(field, av)
        .map_err(|e| e.to_string())?
        .into_handle();
    let alpha_map: LinMap<S> = if alpha == "id" {
        LinMap::identity(alg.field(), alg.dim())
    } else {
        let v = load_json(Path::new(alpha))?;
        let rows = v
            .as_array()
            .ok_or_else(|| "alpha file must contain a matrix".to_string())?;
        let mut images = Vec::new();
        for c in 0..alg.dim() {
            let col: Vec<S> = rows
                .iter()
                .map(|row| {
                    let cell = row.get(c).ok_or_else(|| "ragged alpha matrix".to_string())?;
                    let text = match cell {
                        Value::Number(x) => x.to_string(),
                        Value::String(s) => s.clone(),
                        other => return Err(format!("bad scalar {other}")),
                    };
                    S::parse(alg.field(), &text).map_err(|e| e.to_string())
                })
                .collect::<Result<_, _>>()?;
            images.push(Element::new(col));
        }
        LinMap::from_images(images)
    };
    let module = ytwist_core::obstruction::TwistedBimodule::new(alg, alpha_map, n)
        .map_err(|e| e.to_string())?;
    let (h1, h2) = ytwist_core::obstruction::cohomology_dims(&module);
    let rv = json!({ "h1": h1, "h2": h2, "n": n });
    emit(cli, &rv, &format!("H^1 = {h1}, H^2 = {h2} (right power n = {n})"))?;
    Ok(0)
}
