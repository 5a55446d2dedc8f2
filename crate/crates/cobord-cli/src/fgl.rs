//! Law tables: the universal formal sum grouped by variable powers, and
//! n-series expansions over the stock laws.

use std::sync::Arc;

use clap::ValueEnum;
use cobord_core::fgl::{make_additive, make_multiplicative, make_universal, FormalGroupLaw};
use cobord_core::ring::{SparsePoly, TruncationBudget};
use serde_json::json;

use crate::report::Report;
use crate::CliError;

/// The three stock laws selectable with `--law`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawName {
    Universal,
    Additive,
    Mult,
}

impl LawName {
    pub const ALL: [LawName; 3] = [LawName::Additive, LawName::Mult, LawName::Universal];

    pub fn label(self) -> &'static str {
        match self {
            LawName::Universal => "universal",
            LawName::Additive => "additive",
            LawName::Mult => "mult",
        }
    }

    /// Instantiate the law with the given series cap (and, for the
    /// universal law, as many exponential generators as the cap).
    pub fn build(self, cap: i64) -> FormalGroupLaw {
        match self {
            LawName::Universal => make_universal(cap.max(1) as usize, cap),
            LawName::Additive => make_additive(cap),
            LawName::Mult => make_multiplicative(cap),
        }
    }
}

/// `fgl universal --deg D [--gens N]`: the universal formal sum, one row
/// per `x^i y^j` with its coefficient polynomial.
pub fn universal(deg: i64, gens: Option<usize>) -> Result<Report, CliError> {
    if !(1..=16).contains(&deg) {
        return Err(CliError::Usage(String::from("--deg must be between 1 and 16")));
    }
    let n = gens.unwrap_or(deg as usize);
    if (n as i64) < deg {
        return Err(CliError::Usage(format!("--gens {n} is below --deg {deg}; need at least one generator per degree")));
    }
    if n > 16 {
        return Err(CliError::Usage(String::from("--gens must be at most 16")));
    }
    let law = make_universal(n, deg);
    let x = law.x;
    let y = law.y;

    let mut rows = Vec::new();
    let mut docs = Vec::new();
    let mut pairs: Vec<(i32, i32)> = Vec::new();
    for i in 0..=deg as i32 {
        for j in 0..=deg as i32 {
            pairs.push((i, j));
        }
    }
    pairs.sort_by_key(|&(i, j)| (i + j, i));
    for (i, j) in pairs {
        let c = law.f.coefficient_of_power(x, i).coefficient_of_power(y, j);
        if c.is_zero() {
            continue;
        }
        let value = c.to_string();
        rows.push(vec![i.to_string(), j.to_string(), value.clone()]);
        docs.push(json!({ "x": i, "y": j, "value": value }));
    }

    Ok(Report {
        ok: true,
        columns: vec!["x", "y", "coefficient"],
        rows,
        json: json!({ "law": "universal", "deg": deg, "gens": n, "coefficients": docs, "status": "pass" }),
        witness: None,
    })
}

/// `fgl nseries --n P --law L [--deg D]`: the formal multiple `[n]·t`,
/// one row per power of the parameter.
pub fn nseries(n: i64, law_name: LawName, deg: i64) -> Result<Report, CliError> {
    if !(1..=16).contains(&deg) {
        return Err(CliError::Usage(String::from("--deg must be between 1 and 16")));
    }
    let law = Arc::new(law_name.build(deg));
    let budget = TruncationBudget::series(deg);
    let t = SparsePoly::variable(&law.ring, law.t);
    let series = law.n_series(n, &t, &budget).map_err(|e| CliError::Failed(e.to_string()))?;

    let mut rows = Vec::new();
    let mut docs = Vec::new();
    for (k, coeff) in series.univariate_in(law.t) {
        if coeff.is_zero() {
            continue;
        }
        let value = coeff.to_string();
        rows.push(vec![k.to_string(), value.clone()]);
        docs.push(json!({ "t": k, "value": value }));
    }

    Ok(Report {
        ok: true,
        columns: vec!["t", "coefficient"],
        rows,
        json: json!({ "law": law_name.label(), "n": n, "deg": deg, "series": docs, "status": "pass" }),
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn universal_degree_two_names_the_crossing_coefficient() {
        let report = universal(2, None).unwrap();
        assert!(report.ok);
        let row = report.rows.iter().find(|r| r[0] == "1" && r[1] == "1").expect("xy row");
        assert_eq!(row[2], "2*b1");
    }

    #[test]
    fn doubling_series_over_the_additive_law_is_plain() {
        let report = nseries(2, LawName::Additive, 6).unwrap();
        assert_eq!(report.rows, vec![vec![String::from("1"), String::from("2")]]);
    }

    #[test]
    fn gens_below_degree_is_a_flag_error() {
        assert!(matches!(universal(4, Some(2)), Err(CliError::Usage(_))));
    }
}
