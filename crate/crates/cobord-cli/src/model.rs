//! JSON divisor models for the `snc` suites.
//!
//! A model file lists the source divisor's components and, optionally, an
//! incidence matrix describing a map onto an auto-named target divisor:
//!
//! ```json
//! { "components": [ {"name": "mu1", "mult": 2}, {"name": "mu2", "mult": 3} ],
//!   "incidence": [ [2, 3] ] }
//! ```
//!
//! Each incidence row is one target component (named `T1`, `T2`, … with
//! multiplicity 1); entry `[i][j]` is how often source component `j` hits
//! the pull-back of target component `i`.  Without `incidence` the map is
//! the identity square on the listed components.

use std::path::Path;

use serde::Deserialize;

#[derive(Deserialize)]
struct FileModel {
    components: Vec<FileComp>,
    #[serde(default)]
    incidence: Option<Vec<Vec<i64>>>,
}

#[derive(Deserialize)]
struct FileComp {
    name: String,
    mult: i64,
}

/// A validated divisor description ready to instantiate over any law.
#[derive(Debug, Clone)]
pub struct DivisorSpec {
    /// Source components: `(name, multiplicity)`.
    pub components: Vec<(String, i64)>,
    /// Incidence rows, one per target component.
    pub incidence: Vec<Vec<i64>>,
}

/// Names reserved by the engine's rings and scaffolding.
fn reserved(name: &str) -> bool {
    matches!(name, "x" | "y" | "t" | "u" | "v" | "beta")
        || is_indexed(name, "b")
        || is_indexed(name, "z")
        || is_indexed(name, "T")
        || is_indexed(name, "slot")
}

fn is_indexed(name: &str, prefix: &str) -> bool {
    name.strip_prefix(prefix).is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

/// Load and validate a model file; `None` yields the built-in two-component
/// ramified model `mu1² + mu2³ → T1`.
pub fn load(path: Option<&Path>) -> Result<DivisorSpec, String> {
    let file = match path {
        None => FileModel {
            components: vec![
                FileComp { name: String::from("mu1"), mult: 2 },
                FileComp { name: String::from("mu2"), mult: 3 },
            ],
            incidence: Some(vec![vec![2, 3]]),
        },
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{} is not a valid model: {e}", p.display()))?
        }
    };

    let n = file.components.len();
    if n == 0 {
        return Err(String::from("a model needs at least one component"));
    }
    if n > 6 {
        return Err(format!("{n} components exceed the desk-scale limit of 6"));
    }
    let mut components = Vec::with_capacity(n);
    for comp in &file.components {
        let name = comp.name.trim();
        let well_formed = name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic())
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !well_formed {
            return Err(format!("component name {:?} must be alphanumeric and start with a letter", comp.name));
        }
        if reserved(name) {
            return Err(format!("component name {name} is reserved"));
        }
        if components.iter().any(|(existing, _)| existing == name) {
            return Err(format!("component name {name} is repeated"));
        }
        if !(1..=9).contains(&comp.mult) {
            return Err(format!("multiplicity of {name} must be between 1 and 9, got {}", comp.mult));
        }
        components.push((String::from(name), comp.mult));
    }

    let incidence = match file.incidence {
        Some(rows) => rows,
        None => (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect(),
    };
    if incidence.is_empty() {
        return Err(String::from("the incidence matrix needs at least one target row"));
    }
    if incidence.len() > 4 {
        return Err(format!("{} target components exceed the desk-scale limit of 4", incidence.len()));
    }
    for (i, row) in incidence.iter().enumerate() {
        if row.len() != n {
            return Err(format!("incidence row {} has {} entries for {n} components", i + 1, row.len()));
        }
        for &e in row {
            if !(0..=9).contains(&e) {
                return Err(format!("incidence entries must be between 0 and 9, got {e}"));
            }
        }
    }
    Ok(DivisorSpec { components, incidence })
}
