//! The symmetric operation from the command line.
//!
//! `symop phi` divides the nonpositive part of `□^p − St` on one input by
//! the formal `[p]` and reports the quotient; `symop verify` runs the
//! division, residual and uniqueness checks over the standard input set.
//! Per-input computations are independent, so `verify` fans out across
//! threads, capped by the `COBORD_OPS_THREADS` environment variable.

use std::path::Path;
use std::sync::Arc;

use cobord_core::fgl::{make_universal, FormalGroupLaw};
use cobord_core::ring::{GeneratorSet, SparsePoly, TruncationBudget};
use cobord_core::symop::{symmetric_phi, verify_phi, PhiReport, SteenrodConfig, SymopError};
use num_traits::Zero;
use serde_json::json;

use crate::input::{self, Term};
use crate::report::Report;
use crate::CliError;

/// What the input terms demand of the coefficient ring.
struct InputProfile {
    /// Maximal per-term twist weight `Σ (k+1)·e` over `b_k` factors.
    b_weight: i64,
    /// Deepest `b_k` index mentioned.
    deepest: i64,
    /// Highest series-variable index mentioned.
    zmax: u32,
}

fn profile(terms: &[Term]) -> Result<InputProfile, CliError> {
    let mut out = InputProfile { b_weight: 0, deepest: 0, zmax: 1 };
    for term in terms {
        if term.powers.is_empty() && !term.coeff.is_zero() {
            return Err(CliError::Usage(String::from("input must have zero constant term")));
        }
        let mut weight = 0i64;
        for (name, &e) in &term.powers {
            if let Some(k) = indexed(name, 'b') {
                if !(1..=12).contains(&k) {
                    return Err(CliError::Usage(format!("coefficient generator {name} is out of range (b1..b12)")));
                }
                weight += (k + 1) * i64::from(e);
                out.deepest = out.deepest.max(k);
            } else if let Some(i) = indexed(name, 'z') {
                if !(1..=9).contains(&i) {
                    return Err(CliError::Usage(format!("series variable {name} is out of range (z1..z9)")));
                }
                out.zmax = out.zmax.max(i as u32);
            } else {
                return Err(CliError::Usage(format!(
                    "unknown symbol {name}; inputs use z1..z9 and b1..b12"
                )));
            }
        }
        out.b_weight = out.b_weight.max(weight);
    }
    Ok(out)
}

fn indexed(name: &str, prefix: char) -> Option<i64> {
    let rest = name.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

fn parse_reps(p: i64, reps: Option<&str>) -> Result<SteenrodConfig, CliError> {
    let config = match reps {
        None => SteenrodConfig::new(p),
        Some(list) => {
            let parsed: Result<Vec<i64>, _> = list.split(',').map(|s| s.trim().parse::<i64>()).collect();
            let parsed = parsed.map_err(|_| CliError::Usage(format!("--reps {list:?} must be a comma-separated integer list")))?;
            SteenrodConfig::with_reps(p, parsed)
        }
    };
    config.map_err(|e| CliError::Usage(e.to_string()))
}

/// Universal law big enough that the division works exactly to the report
/// budget: the working window reaches `deg` above zero and `max(K, depth)`
/// below, plus positive-side slack for deep coefficient generators.
fn sized_law(deg: i64, k: i64, p: i64, prof: &InputProfile, gens: Option<usize>) -> Result<Arc<FormalGroupLaw>, CliError> {
    let depth = (p - 1) * (prof.b_weight + 1);
    let slack = if prof.deepest == 0 { 0 } else { (prof.deepest + 2 - p).max(0) };
    let needed = deg + k.max(depth) + slack;
    let cap = needed.max(gens.map(|g| g as i64).unwrap_or(0)).max(deg);
    if cap > 48 {
        return Err(CliError::Usage(format!(
            "the input needs a coefficient ring of {cap} generators; desk-scale limit is 48"
        )));
    }
    Ok(Arc::new(make_universal(cap as usize, cap)))
}

fn variable_ring(law: &FormalGroupLaw, zmax: u32) -> Arc<GeneratorSet> {
    let mut builder = GeneratorSet::extend(&law.ring);
    for i in 1..=zmax.max(2) {
        builder.series(&format!("z{i}"));
    }
    builder.freeze()
}

/// `symop phi --p P [--reps LIST] --input POLY [--deg D] [--floor K]`.
#[allow(clippy::too_many_arguments)]
pub fn phi(
    p: i64,
    reps: Option<&str>,
    input: Option<&str>,
    input_file: Option<&Path>,
    deg: i64,
    floor: Option<i64>,
    gens: Option<usize>,
) -> Result<Report, CliError> {
    if !(0..=12).contains(&deg) {
        return Err(CliError::Usage(String::from("--deg must be between 0 and 12")));
    }
    let config = parse_reps(p, reps)?;
    let terms = match (input, input_file) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(String::from("--input and --input-file are mutually exclusive")))
        }
        (Some(src), None) => input::parse_poly(src).map_err(CliError::Usage)?,
        (None, Some(path)) => input::load_terms(path).map_err(CliError::Usage)?,
        (None, None) => return Err(CliError::Usage(String::from("one of --input or --input-file is required"))),
    };
    let prof = profile(&terms)?;
    let k = floor.unwrap_or(deg);
    if k < 0 {
        return Err(CliError::Usage(String::from("--floor must be nonnegative")));
    }
    let law = sized_law(deg, k, p, &prof, gens)?;
    let ring = variable_ring(&law, prof.zmax);
    let poly = input::resolve(&terms, &ring).map_err(CliError::Usage)?;
    let budget = TruncationBudget::series(deg).with_floor(law.t, k);

    let input_text = poly.to_string();
    match symmetric_phi(&config, &law, &poly, &budget) {
        Ok(result) => {
            let phi_text = result.phi.to_poly().to_string();
            let min_exp = result.residual.min_exponent();
            let row = vec![
                input_text.clone(),
                phi_text.clone(),
                min_exp.map(|e| e.to_string()).unwrap_or_else(|| String::from("-")),
                String::from("true"),
            ];
            Ok(Report {
                ok: true,
                columns: vec!["input", "phi", "residual_min_exponent", "divisions_exact"],
                rows: vec![row],
                json: json!({
                    "input": input_text,
                    "phi": phi_text,
                    "residual_min_exponent": min_exp,
                    "divisions_exact": true,
                }),
                witness: None,
            })
        }
        Err(SymopError::Division { exponent, detail }) => {
            let witness = format!("division failed at t^{exponent}: {detail}");
            let row = vec![input_text.clone(), String::from("-"), String::from("-"), String::from("false")];
            Ok(Report {
                ok: false,
                columns: vec!["input", "phi", "residual_min_exponent", "divisions_exact"],
                rows: vec![row],
                json: json!({
                    "input": input_text,
                    "phi": serde_json::Value::Null,
                    "residual_min_exponent": serde_json::Value::Null,
                    "divisions_exact": false,
                    "witness": witness,
                }),
                witness: Some(witness),
            })
        }
        Err(other) => Err(CliError::Failed(other.to_string())),
    }
}

/// `symop verify --p P [--reps LIST] [--deg D]`: the standard input set.
pub fn verify(p: i64, reps: Option<&str>, deg: i64, gens: Option<usize>) -> Result<Report, CliError> {
    if !(2..=10).contains(&deg) {
        return Err(CliError::Usage(String::from("--deg must be between 2 and 10")));
    }
    let config = parse_reps(p, reps)?;
    let prof = InputProfile { b_weight: 2, deepest: 1, zmax: 2 };
    let law = sized_law(deg, deg, p, &prof, gens)?;
    let ring = variable_ring(&law, prof.zmax);
    let budget = TruncationBudget::series(deg).with_floor(law.t, deg);

    let z1 = SparsePoly::variable(&ring, ring.id("z1").expect("z1 registered"));
    let z2 = SparsePoly::variable(&ring, ring.id("z2").expect("z2 registered"));
    let b1 = SparsePoly::variable(&ring, ring.id("b1").expect("b1 in the universal ring"));
    let wide = TruncationBudget::unbounded();
    let inputs = [
        z1.clone(),
        z1.mul(&z1, &wide).map_err(|e| CliError::Failed(e.to_string()))?,
        z1.mul(&z2, &wide).map_err(|e| CliError::Failed(e.to_string()))?,
        b1.mul(&z1, &wide).map_err(|e| CliError::Failed(e.to_string()))?,
    ];

    let report = run_parallel(&config, &law, &inputs, &budget)?;
    let ok = report.all_passed();
    let mut rows = Vec::new();
    let mut docs = Vec::new();
    let mut witness = None;
    for check in &report.checks {
        rows.push(vec![
            check.input.clone(),
            check.division_ok.to_string(),
            check.residual_ok.to_string(),
            check.uniqueness_ok.to_string(),
            String::from(if check.passed() { "pass" } else { "FAIL" }),
        ]);
        docs.push(json!({
            "input": check.input,
            "division_ok": check.division_ok,
            "residual_ok": check.residual_ok,
            "uniqueness_ok": check.uniqueness_ok,
            "witness": check.witness,
        }));
        if !check.passed() && witness.is_none() {
            witness = Some(format!("{}: {}", check.input, check.witness.clone().unwrap_or_default()));
        }
    }

    Ok(Report {
        ok,
        columns: vec!["input", "division", "residual", "uniqueness", "status"],
        rows,
        json: json!({
            "p": p,
            "deg": deg,
            "checks": docs,
            "witness": witness,
            "status": if ok { "pass" } else { "fail" },
        }),
        witness,
    })
}

/// Verify each input on its own worker, capped by `COBORD_OPS_THREADS`,
/// and reassemble the checks in input order.
fn run_parallel(
    config: &SteenrodConfig,
    law: &Arc<FormalGroupLaw>,
    inputs: &[SparsePoly],
    budget: &TruncationBudget,
) -> Result<PhiReport, CliError> {
    let workers = thread_cap(inputs.len());
    let results: Vec<Result<PhiReport, SymopError>> = if workers <= 1 {
        inputs
            .iter()
            .map(|input| verify_phi(config, law, core::slice::from_ref(input), budget))
            .collect()
    } else {
        let mut slots: Vec<Option<Result<PhiReport, SymopError>>> = Vec::new();
        slots.resize_with(inputs.len(), || None);
        std::thread::scope(|scope| {
            let mut handles = Vec::with_capacity(workers);
            for start in 0..workers {
                handles.push(scope.spawn(move || {
                    let mut bucket = Vec::new();
                    let mut i = start;
                    while i < inputs.len() {
                        bucket.push((i, verify_phi(config, law, core::slice::from_ref(&inputs[i]), budget)));
                        i += workers;
                    }
                    bucket
                }));
            }
            for handle in handles {
                for (i, result) in handle.join().expect("verification worker panicked") {
                    slots[i] = Some(result);
                }
            }
        });
        slots.into_iter().map(|s| s.expect("every input assigned to a worker")).collect()
    };

    let mut merged = PhiReport { checks: Vec::with_capacity(inputs.len()) };
    for result in results {
        let mut partial = result.map_err(|e| CliError::Failed(e.to_string()))?;
        merged.checks.append(&mut partial.checks);
    }
    Ok(merged)
}

/// Worker count: `COBORD_OPS_THREADS` if set, else the machine's
/// parallelism, never more than `upper`.
fn thread_cap(upper: usize) -> usize {
    let configured = std::env::var("COBORD_OPS_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0);
    let hardware = std::thread::available_parallelism().map(std::num::NonZeroUsize::get).unwrap_or(1);
    configured.unwrap_or(hardware).min(upper.max(1))
}
