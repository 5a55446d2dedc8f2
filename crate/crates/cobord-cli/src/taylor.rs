//! Randomized suites for the discrete-derivative calculus.

use clap::ValueEnum;
use cobord_core::taylor::{chain_suite, dte_suite};
use serde_json::json;

use crate::report::Report;
use crate::CliError;

/// Suites selectable with `--suite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaylorSuiteArg {
    /// Finite Taylor reconstruction from iterated discrete derivatives.
    Dte,
    /// Discrete chain rule for composites.
    Chain,
}

impl TaylorSuiteArg {
    fn label(self) -> &'static str {
        match self {
            TaylorSuiteArg::Dte => "dte",
            TaylorSuiteArg::Chain => "chain",
        }
    }
}

/// `taylor check --suite S --seed N [--instances M]`.
pub fn check(suite: TaylorSuiteArg, seed: u64, instances: usize) -> Result<Report, CliError> {
    if !(1..=100_000).contains(&instances) {
        return Err(CliError::Usage(String::from("--instances must be between 1 and 100000")));
    }
    let outcome = match suite {
        TaylorSuiteArg::Dte => dte_suite(instances, seed),
        TaylorSuiteArg::Chain => chain_suite(instances, seed),
    }
    .map_err(|e| CliError::Failed(e.to_string()))?;

    let ok = outcome.passed();
    let witness = outcome.first_witness.clone();
    let row = vec![
        String::from(suite.label()),
        seed.to_string(),
        outcome.instances.to_string(),
        outcome.failures.to_string(),
        String::from(if ok { "pass" } else { "FAIL" }),
    ];
    Ok(Report {
        ok,
        columns: vec!["suite", "seed", "instances", "failures", "status"],
        rows: vec![row],
        json: json!({
            "suite": suite.label(),
            "seed": seed,
            "instances": outcome.instances,
            "failures": outcome.failures,
            "witness": witness,
            "status": if ok { "pass" } else { "fail" },
        }),
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_small_deterministic_run_passes() {
        let report = check(TaylorSuiteArg::Dte, 11, 5).unwrap();
        assert!(report.ok);
        assert_eq!(report.rows[0][3], "0");
    }
}
