//! Divisor-calculus check suites.
//!
//! Every suite instantiates the model from `--model` (or the built-in
//! ramified pair) over all three stock laws and verifies an exact algebraic
//! identity: splitting recombination, the push-pull exchange around a
//! square, the residue form of an operation on push-forwards, or the
//! face-wise chain rule.

use std::path::Path;
use std::sync::Arc;

use clap::ValueEnum;
use cobord_core::fgl::FormalGroupLaw;
use cobord_core::projops::{pushforward_rhs, OpsError, Repr, Transformation};
use cobord_core::ring::{GeneratorSet, SparsePoly, SymbolId, TruncationBudget};
use cobord_core::snc::{
    ambient_pushforward, check_mpeif, check_subcentral_identity, gtil, pullback_dstar, splitting_series,
    Convention, SNCModel, SquareData,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::json;

use crate::fgl::LawName;
use crate::model::DivisorSpec;
use crate::report::Report;
use crate::CliError;

/// Suites selectable with `--suite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SncSuiteArg {
    /// Splitting series recombine to the full class under both conventions.
    Recombine,
    /// Push-pull exchange around the model's square has zero residual.
    Mpeif,
    /// Residue form of an operation agrees with the push-forward rule.
    Gtil,
    /// Face-wise chain rule on the square has zero residual.
    Subcentral,
}

impl SncSuiteArg {
    fn label(self) -> &'static str {
        match self {
            SncSuiteArg::Recombine => "recombine",
            SncSuiteArg::Mpeif => "mpeif",
            SncSuiteArg::Gtil => "gtil",
            SncSuiteArg::Subcentral => "subcentral",
        }
    }
}

struct CheckRow {
    law: &'static str,
    name: String,
    passed: bool,
    witness: Option<String>,
}

fn fail(e: impl core::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

fn law_for(name: LawName, deg: i64) -> Arc<FormalGroupLaw> {
    // The universal law's coefficient ring grows quickly with the cap; four
    // degrees of headroom cover every residue computation at desk scale,
    // while the two closed-form laws get more for free.
    let cap = if name == LawName::Universal { deg + 4 } else { deg + 8 };
    Arc::new(name.build(cap))
}

fn source_model(law: &Arc<FormalGroupLaw>, spec: &DivisorSpec) -> Result<SNCModel, CliError> {
    let comps: Vec<(&str, i64)> = spec.components.iter().map(|(n, m)| (n.as_str(), *m)).collect();
    SNCModel::new(law, &law.ring, &comps).map_err(|e| CliError::Usage(e.to_string()))
}

/// Model with fresh slot symbols for residue computations.
fn model_with_slots(
    law: &Arc<FormalGroupLaw>,
    comps: &[(&str, i64)],
) -> Result<(SNCModel, Vec<SymbolId>), CliError> {
    let mut builder = GeneratorSet::extend(&law.ring);
    let slots: Vec<SymbolId> = (0..comps.len()).map(|i| builder.series(&format!("slot{i}"))).collect();
    let base = builder.freeze();
    let model = SNCModel::new(law, &base, comps).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((model, slots))
}

fn square(law: &Arc<FormalGroupLaw>, spec: &DivisorSpec) -> Result<SquareData, CliError> {
    let target_names: Vec<String> = (1..=spec.incidence.len()).map(|i| format!("T{i}")).collect();
    let target_comps: Vec<(&str, i64)> = target_names.iter().map(|n| (n.as_str(), 1)).collect();
    let target = SNCModel::new(law, &law.ring, &target_comps).map_err(|e| CliError::Usage(e.to_string()))?;
    let source_comps: Vec<(&str, i64)> = spec.components.iter().map(|(n, m)| (n.as_str(), *m)).collect();
    let source = SNCModel::new(law, &target.ring, &source_comps).map_err(|e| CliError::Usage(e.to_string()))?;
    SquareData::new(target, source, spec.incidence.clone()).map_err(|e| CliError::Usage(e.to_string()))
}

fn root_var(model: &SNCModel, i: usize) -> SparsePoly {
    SparsePoly::variable(&model.ring, model.roots[i])
}

fn zero_check(rows: &mut Vec<CheckRow>, law: &'static str, name: String, residual: &SparsePoly) {
    rows.push(CheckRow {
        law,
        name,
        passed: residual.is_zero(),
        witness: if residual.is_zero() { None } else { Some(format!("residual {residual}")) },
    });
}

fn equality_check(rows: &mut Vec<CheckRow>, law: &'static str, name: String, lhs: &SparsePoly, rhs: &SparsePoly) {
    let passed = lhs == rhs;
    rows.push(CheckRow {
        law,
        name,
        passed,
        witness: if passed { None } else { Some(format!("lhs {lhs}; rhs {rhs}")) },
    });
}

/// `snc check --suite S [--model FILE] [--deg D]`.
pub fn check(suite: SncSuiteArg, model_path: Option<&Path>, deg: i64) -> Result<Report, CliError> {
    if !(1..=6).contains(&deg) {
        return Err(CliError::Usage(String::from("--deg must be between 1 and 6")));
    }
    let spec = crate::model::load(model_path).map_err(CliError::Usage)?;
    let budget = TruncationBudget::series(deg);

    let mut rows = Vec::new();
    for law_name in LawName::ALL {
        let law = law_for(law_name, deg);
        match suite {
            SncSuiteArg::Recombine => recombine_suite(&mut rows, law_name.label(), &law, &spec, &budget)?,
            SncSuiteArg::Mpeif => mpeif_suite(&mut rows, law_name.label(), &law, &spec, &budget)?,
            SncSuiteArg::Gtil => gtil_suite(&mut rows, law_name.label(), &law, &spec, &budget)?,
            SncSuiteArg::Subcentral => subcentral_suite(&mut rows, law_name.label(), &law, &spec, &budget)?,
        }
    }

    let ok = rows.iter().all(|r| r.passed);
    let witness = rows
        .iter()
        .find(|r| !r.passed)
        .map(|r| format!("{}/{}: {}", r.law, r.name, r.witness.clone().unwrap_or_default()));
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                String::from(r.law),
                r.name.clone(),
                String::from(if r.passed { "pass" } else { "FAIL" }),
            ]
        })
        .collect();
    let docs: Vec<_> = rows
        .iter()
        .map(|r| json!({ "law": r.law, "name": r.name, "passed": r.passed, "witness": r.witness }))
        .collect();
    let components: Vec<_> = spec.components.iter().map(|(n, m)| json!({ "name": n, "mult": m })).collect();

    Ok(Report {
        ok,
        columns: vec!["law", "check", "status"],
        rows: table,
        json: json!({
            "suite": suite.label(),
            "deg": deg,
            "model": { "components": components, "incidence": spec.incidence },
            "checks": docs,
            "witness": witness,
            "status": if ok { "pass" } else { "fail" },
        }),
        witness,
    })
}

/// Both splitting conventions must recombine to the full divisor class,
/// and ambient push-forwards of restrictions must not depend on the
/// convention.
fn recombine_suite(
    rows: &mut Vec<CheckRow>,
    law_label: &'static str,
    law: &Arc<FormalGroupLaw>,
    spec: &DivisorSpec,
    budget: &TruncationBudget,
) -> Result<(), CliError> {
    let model = source_model(law, spec)?;
    let full = model.full_series(budget).map_err(fail)?;
    for convention in [Convention::Standard, Convention::Concentrated] {
        let split = splitting_series(&model, convention, budget).map_err(fail)?;
        let glued = ambient_pushforward(&model, &split, budget).map_err(fail)?;
        let tag = format!("recombine-{}", convention_label(convention));
        equality_check(rows, law_label, tag, &glued, &full);
    }

    let x = SparsePoly::one(&model.ring).add(&root_var(&model, 0)).map_err(fail)?;
    let standard = pullback_dstar(&model, &x, Convention::Standard, budget).map_err(fail)?;
    let concentrated = pullback_dstar(&model, &x, Convention::Concentrated, budget).map_err(fail)?;
    let lhs = ambient_pushforward(&model, &standard, budget).map_err(fail)?;
    let rhs = ambient_pushforward(&model, &concentrated, budget).map_err(fail)?;
    equality_check(rows, law_label, String::from("restriction-independence"), &lhs, &rhs);
    Ok(())
}

fn convention_label(c: Convention) -> &'static str {
    match c {
        Convention::Standard => "standard",
        Convention::Concentrated => "concentrated",
    }
}

/// Push-pull exchange around the square: zero residual for a family of
/// per-target classes under both conventions.
fn mpeif_suite(
    rows: &mut Vec<CheckRow>,
    law_label: &'static str,
    law: &Arc<FormalGroupLaw>,
    spec: &DivisorSpec,
    budget: &TruncationBudget,
) -> Result<(), CliError> {
    let sq = square(law, spec)?;
    let ring = &sq.source.ring;
    let m = sq.target.len();

    let ones: Vec<SparsePoly> = (0..m).map(|_| SparsePoly::one(ring)).collect();
    let roots: Vec<SparsePoly> =
        (0..m).map(|i| SparsePoly::variable(ring, sq.target.roots[i])).collect();
    let mut shifted = Vec::with_capacity(m);
    for r in &roots {
        shifted.push(SparsePoly::one(ring).add(r).map_err(fail)?);
    }
    for (family, classes) in [("units", &ones), ("roots", &roots), ("shifted", &shifted)] {
        for convention in [Convention::Standard, Convention::Concentrated] {
            let residual = check_mpeif(&sq, classes, convention, budget).map_err(fail)?;
            let tag = format!("exchange-{family}-{}", convention_label(convention));
            zero_check(rows, law_label, tag, &residual);
        }
    }
    Ok(())
}

/// The residue form of the identity is the plain push-forward, component
/// by component, and additive operations contribute no higher faces.
fn gtil_suite(
    rows: &mut Vec<CheckRow>,
    law_label: &'static str,
    law: &Arc<FormalGroupLaw>,
    spec: &DivisorSpec,
    budget: &TruncationBudget,
) -> Result<(), CliError> {
    if spec.components.len() > 3 {
        return Err(CliError::Usage(String::from(
            "the gtil suite takes at most 3 components (iterated-derivative cap)",
        )));
    }
    let comps: Vec<(&str, i64)> = spec.components.iter().map(|(n, m)| (n.as_str(), *m)).collect();
    let (model, slots) = model_with_slots(law, &comps)?;
    let n = model.len();
    let gammas: Vec<SparsePoly> = (0..n)
        .map(|i| SparsePoly::one(&model.ring).add(&root_var(&model, i)).map_err(fail))
        .collect::<Result<_, _>>()?;

    let identity = Transformation::identity(law, budget);
    let out = gtil(&identity, &model, &gammas, &slots, budget).map_err(fail)?;
    rows.push(CheckRow {
        law: law_label,
        name: String::from("identity-singleton-faces"),
        passed: out.terms.keys().all(|k| k.count_ones() == 1),
        witness: Some(format!("faces {:?}", out.terms.keys().collect::<Vec<_>>()))
            .filter(|_| !out.terms.keys().all(|k| k.count_ones() == 1)),
    });
    for i in 0..n {
        let residue =
            pushforward_rhs(&identity, &gammas[i], &[slots[i]], &[model.roots[i]], budget).map_err(fail)?;
        let expected = residue.mul(&root_var(&model, i), budget).map_err(fail)?;
        let got = out.terms.get(&(1 << i)).cloned().unwrap_or_else(|| SparsePoly::zero(&model.ring));
        equality_check(rows, law_label, format!("identity-residue-{}", model.names[i]), &got, &expected);
    }

    let triple = |alpha: &SparsePoly, _: &TruncationBudget| -> Result<SparsePoly, OpsError> {
        Ok(alpha.scalar_mul(&BigRational::from_integer(BigInt::from(3))))
    };
    let additive = Transformation {
        label: String::from("triple"),
        source: law.clone(),
        target: law.clone(),
        repr: Repr::BlackBox(Arc::new(triple)),
        budget: budget.clone(),
    };
    let out3 = gtil(&additive, &model, &gammas, &slots, budget).map_err(fail)?;
    rows.push(CheckRow {
        law: law_label,
        name: String::from("additive-singleton-faces"),
        passed: out3.terms.keys().all(|k| k.count_ones() == 1),
        witness: Some(format!("faces {:?}", out3.terms.keys().collect::<Vec<_>>()))
            .filter(|_| !out3.terms.keys().all(|k| k.count_ones() == 1)),
    });

    // Squaring on a single-component model agrees with the residue rule.
    let (single, single_slots) = model_with_slots(law, &comps[..1])?;
    let gamma = SparsePoly::one(&single.ring).add(&root_var(&single, 0)).map_err(fail)?;
    let power = Transformation::power(law, 2, budget);
    let out2 = gtil(&power, &single, &[gamma.clone()], &single_slots, budget).map_err(fail)?;
    let residue =
        pushforward_rhs(&power, &gamma, &[single_slots[0]], &[single.roots[0]], budget).map_err(fail)?;
    let expected = residue.mul(&root_var(&single, 0), budget).map_err(fail)?;
    equality_check(rows, law_label, String::from("power2-residue"), &out2.total, &expected);
    Ok(())
}

/// Face-wise chain rule around the square for the identity and squaring,
/// over every source face with at most two components.
fn subcentral_suite(
    rows: &mut Vec<CheckRow>,
    law_label: &'static str,
    law: &Arc<FormalGroupLaw>,
    spec: &DivisorSpec,
    budget: &TruncationBudget,
) -> Result<(), CliError> {
    let sq = square(law, spec)?;
    let n = sq.source.len();
    let gamma = SparsePoly::one(&sq.source.ring)
        .add(&SparsePoly::variable(&sq.source.ring, sq.target.roots[0]))
        .map_err(fail)?;
    let ops: [(&str, Transformation); 2] = [
        ("identity", Transformation::identity(law, budget)),
        ("power2", Transformation::power(law, 2, budget)),
    ];
    for (op_label, g) in &ops {
        for mask in 1u32..(1 << n) {
            if mask.count_ones() > 2 {
                continue;
            }
            let residual = check_subcentral_identity(g, &sq, &gamma, mask, budget).map_err(fail)?;
            zero_check(rows, law_label, format!("chain-{op_label}-faces{mask:02b}"), &residual);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recombination_passes_on_the_default_model() {
        let report = check(SncSuiteArg::Recombine, None, 3).unwrap();
        assert!(report.ok, "witness: {:?}", report.witness);
        assert_eq!(report.rows.len(), 9);
    }
}
