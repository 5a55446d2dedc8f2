//! Interchange-law checks for structured transformations.
//!
//! `ops check --op OP --deg D` runs the four interchange laws (variable
//! symmetry, zero substitution, formal-sum slot exchange, relabelling)
//! over all three stock laws.  The power-twisted multiplicative operation
//! is checked against its conjugated target law: the total operation sends
//! a first Chern class to `γ(x)`, so the target's formal sum is the
//! `γ`-conjugate of the source's, and the pair passes the slot exchange
//! exactly.

use std::collections::BTreeMap;
use std::sync::Arc;

use cobord_core::fgl::FormalGroupLaw;
use cobord_core::projops::{
    check_axioms, check_axioms_windowed, conjugated_law, standard_sample_library, AxiomContext, AxiomReport,
    Repr, Transformation,
};
use cobord_core::ring::{GeneratorSet, SparsePoly, SymbolId, TruncationBudget};
use cobord_core::symop::{gamma_st, SteenrodConfig};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::json;

use crate::fgl::LawName;
use crate::report::Report;
use crate::CliError;

/// Parsed `--op` argument.
#[derive(Debug, Clone, Copy)]
pub enum OpSpec {
    Identity,
    Power(u32),
    Steenrod(i64),
}

impl OpSpec {
    pub fn parse(op: &str) -> Result<OpSpec, CliError> {
        if op == "identity" {
            return Ok(OpSpec::Identity);
        }
        if let Some(rest) = op.strip_prefix("power:") {
            let p: u32 = rest
                .parse()
                .ok()
                .filter(|&p| (1..=5).contains(&p))
                .ok_or_else(|| CliError::Usage(format!("power exponent {rest:?} must be an integer in 1..=5")))?;
            return Ok(OpSpec::Power(p));
        }
        if let Some(rest) = op.strip_prefix("steenrod:") {
            let p: i64 = rest
                .parse()
                .map_err(|_| CliError::Usage(format!("prime {rest:?} must be an integer")))?;
            // Validates primality; the default representatives are rebuilt later.
            SteenrodConfig::new(p).map_err(|e| CliError::Usage(e.to_string()))?;
            return Ok(OpSpec::Steenrod(p));
        }
        Err(CliError::Usage(format!("unknown --op {op:?}; expected identity, power:P or steenrod:P")))
    }
}

/// Sample variables and slot symbols threaded through a law's ring.
struct Scaffold {
    ring: Arc<GeneratorSet>,
    z: Vec<SymbolId>,
    u: SymbolId,
    v: SymbolId,
}

fn scaffold(law: &FormalGroupLaw) -> Scaffold {
    let mut builder = GeneratorSet::extend(&law.ring);
    let z = (1..=4).map(|i| builder.series(&format!("z{i}"))).collect();
    let u = builder.series("u");
    let v = builder.series("v");
    Scaffold { ring: builder.freeze(), z, u, v }
}

fn context(sc: &Scaffold, compare: TruncationBudget) -> AxiomContext {
    AxiomContext {
        swap: (sc.z[0], sc.z[1]),
        kill: sc.z[0],
        sum_slot: sc.z[0],
        fresh: (sc.u, sc.v),
        rename: (sc.z[0], sc.z[3]),
        compare,
    }
}

/// `ops check --op OP --deg D`.
pub fn check(op: &str, deg: i64) -> Result<Report, CliError> {
    if !(1..=6).contains(&deg) {
        return Err(CliError::Usage(String::from("--deg must be between 1 and 6")));
    }
    let spec = OpSpec::parse(op)?;

    let mut ok = true;
    let mut witness = None;
    let mut rows = Vec::new();
    let mut law_docs = Vec::new();
    for law_name in LawName::ALL {
        let report = match spec {
            OpSpec::Identity | OpSpec::Power(_) => check_plain(spec, law_name, deg)?,
            OpSpec::Steenrod(p) => check_steenrod(p, law_name, deg)?,
        };
        for c in &report.checks {
            rows.push(vec![
                String::from(op),
                String::from(law_name.label()),
                c.name.clone(),
                String::from(if c.passed { "pass" } else { "FAIL" }),
            ]);
            if !c.passed && witness.is_none() {
                witness = Some(format!(
                    "{}/{}: {}",
                    law_name.label(),
                    c.name,
                    c.witness.clone().unwrap_or_default()
                ));
            }
        }
        ok &= report.all_passed();
        let checks: Vec<_> = report
            .checks
            .iter()
            .map(|c| json!({ "name": c.name, "passed": c.passed, "witness": c.witness }))
            .collect();
        law_docs.push(json!({
            "law": law_name.label(),
            "all_passed": report.all_passed(),
            "checks": checks,
        }));
    }

    Ok(Report {
        ok,
        columns: vec!["op", "law", "axiom", "status"],
        rows,
        json: json!({
            "op": op,
            "deg": deg,
            "laws": law_docs,
            "witness": witness,
            "status": if ok { "pass" } else { "fail" },
        }),
        witness,
    })
}

/// Identity and plain powers stay polynomial, so one extra degree of
/// working headroom over the comparison cap is enough.
fn check_plain(spec: OpSpec, law_name: LawName, deg: i64) -> Result<AxiomReport, CliError> {
    let cap = deg + 1;
    let law = Arc::new(law_name.build(cap));
    let sc = scaffold(&law);
    let budget = TruncationBudget::series(cap);
    let g = match spec {
        OpSpec::Identity => Transformation::identity(&law, &budget),
        OpSpec::Power(p) => Transformation::power(&law, p, &budget),
        OpSpec::Steenrod(_) => unreachable!("handled by check_steenrod"),
    };
    let coeff = if law_name == LawName::Universal { law.ring.id("b1") } else { None };
    let samples = standard_sample_library(&sc.ring, &sc.z, coeff);
    check_axioms(&g, &context(&sc, TruncationBudget::series(deg)), &samples)
        .map_err(|e| CliError::Failed(e.to_string()))
}

/// Sample series of degree at most 2 in the scaffold variables: every
/// variable, every pairwise sum/difference/product, the squares, and a few
/// mixed shapes — 21 series, each containing the sum slot `z1` somewhere
/// in the set so the slot exchange is exercised up to `z1²`.
fn quadratic_sample_library(sc: &Scaffold) -> Vec<SparsePoly> {
    let b = TruncationBudget::unbounded();
    let z: Vec<SparsePoly> = sc.z.iter().map(|&s| SparsePoly::variable(&sc.ring, s)).collect();
    let two = |p: &SparsePoly| p.scalar_mul(&BigRational::from_integer(BigInt::from(2)));
    let mut out = Vec::new();
    out.extend(z.iter().cloned());
    for i in 0..z.len() {
        for j in i..z.len() {
            out.push(z[i].mul(&z[j], &b).expect("sample product"));
        }
    }
    for j in 1..z.len() {
        out.push(z[0].add(&z[j]).expect("sample sum"));
    }
    out.push(z[0].sub(&two(&z[1])).expect("sample difference"));
    out.push(two(&z[0]).add(&z[1].mul(&z[2], &b).expect("sample product")).expect("sample mix"));
    out.push(z[0].mul(&z[0], &b).expect("sample square").sub(&z[2]).expect("sample mix"));
    out.push(z[3].add(&two(&z[0].mul(&z[1], &b).expect("sample product"))).expect("sample mix"));
    out
}

/// The total power operation maps into the `γ`-conjugated law, whose
/// formal sum has Laurent terms in the parameter, so the checks run with
/// two budgets: a comparison window (cap `deg`, floor `p−1`, coefficient
/// weight ≤ 1) defining what is verified, and a working budget deep enough
/// that every term the window can reach is computed exactly.  The working
/// floor covers the window floor plus the largest parameter power the
/// evaluated samples carry — each of the at most two `γ` factors
/// contributes `p−1` plus one weight-capped coefficient tail — and the
/// working cap feeds the same headroom back into the series direction.
/// Coefficient-weight truncation is a ring quotient, so it is applied
/// uniformly to every budget.
fn check_steenrod(p: i64, law_name: LawName, deg: i64) -> Result<AxiomReport, CliError> {
    let config = SteenrodConfig::new(p).map_err(|e| CliError::Usage(e.to_string()))?;
    let coeff_cap = 1i64;
    let compare_floor = p - 1;
    let host_power = 2 * (p - 1) + coeff_cap;
    let work_floor = compare_floor + host_power + (p - 1);
    let work_cap = deg + work_floor;
    let law = Arc::new(law_name.build(work_cap));
    let work = TruncationBudget::series(work_cap)
        .with_floor(law.t, work_floor)
        .with_coefficient_cap(coeff_cap);

    let gamma = gamma_st(&config, &law, &work).map_err(|e| CliError::Failed(e.to_string()))?;
    let target = conjugated_law(&law, &gamma, &format!("{}-twist{p}", law.name), &work)
        .map_err(|e| CliError::Failed(e.to_string()))?;
    let g = Transformation {
        label: format!("steenrod-p{p}"),
        source: law.clone(),
        target: Arc::new(target),
        repr: Repr::Multiplicative { gamma, phi: BTreeMap::new() },
        budget: work.clone(),
    };

    let sc = scaffold(&law);
    let samples = quadratic_sample_library(&sc);
    let compare = TruncationBudget::series(deg)
        .with_floor(law.t, compare_floor)
        .with_coefficient_cap(coeff_cap);
    check_axioms_windowed(&g, &context(&sc, compare), &work, &samples)
        .map_err(|e| CliError::Failed(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_passes_everywhere() {
        let report = check("identity", 3).unwrap();
        assert!(report.ok, "witness: {:?}", report.witness);
        assert_eq!(report.rows.len(), 12);
    }

    #[test]
    fn op_strings_are_validated() {
        assert!(matches!(OpSpec::parse("power:0"), Err(CliError::Usage(_))));
        assert!(matches!(OpSpec::parse("steenrod:4"), Err(CliError::Usage(_))));
        assert!(matches!(OpSpec::parse("frobenius"), Err(CliError::Usage(_))));
        assert!(matches!(OpSpec::parse("steenrod:3"), Ok(OpSpec::Steenrod(3))));
    }

    #[test]
    fn total_power_operation_passes_the_slot_exchange() {
        let report = check("steenrod:2", 2).unwrap();
        assert!(report.ok, "witness: {:?}", report.witness);
        assert_eq!(report.rows.len(), 12);
    }
}
