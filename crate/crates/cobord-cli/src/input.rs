//! Command-line polynomial inputs.
//!
//! Small inputs use a minimal grammar directly on the command line: terms
//! of the form `c*sym^e*...` joined by `+` and `-`, with `c` an optional
//! integer or `a/b` rational, for example `2*b1*z1 + z1^2 - 3/2*z2`.
//! Larger inputs come from a JSON file: an array of terms, each
//! `{"m": {"sym": exp, ...}, "c": "rational"}`, optionally wrapped as
//! `{"terms": [...]}`.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use cobord_core::ring::{GeneratorSet, Monomial, SparsePoly};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// One parsed term: a rational coefficient and symbol powers by name.
#[derive(Debug, Clone)]
pub struct Term {
    pub coeff: BigRational,
    pub powers: BTreeMap<String, i32>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Sym(String),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
}

fn tokenize(src: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                chars.next();
            }
            '+' => {
                chars.next();
                out.push(Tok::Plus);
            }
            '-' => {
                chars.next();
                out.push(Tok::Minus);
            }
            '*' => {
                chars.next();
                out.push(Tok::Star);
            }
            '^' => {
                chars.next();
                out.push(Tok::Caret);
            }
            '/' => {
                chars.next();
                out.push(Tok::Slash);
            }
            '0'..='9' => {
                let mut digits = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        digits.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let n = BigInt::from_str(&digits).map_err(|e| format!("bad integer {digits}: {e}"))?;
                out.push(Tok::Int(n));
            }
            c if c.is_ascii_alphabetic() => {
                let mut name = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        name.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Tok::Sym(name));
            }
            other => return Err(format!("unexpected character {other:?} in polynomial")),
        }
    }
    Ok(out)
}

/// Parse the command-line polynomial grammar into a term list.
pub fn parse_poly(src: &str) -> Result<Vec<Term>, String> {
    let tokens = tokenize(src)?;
    if tokens.is_empty() {
        return Err(String::from("empty polynomial"));
    }
    let mut terms = Vec::new();
    let mut pos = 0;

    while pos < tokens.len() {
        // Sign prefix: any run of + / - before the term.
        let mut negative = false;
        while let Some(tok) = tokens.get(pos) {
            match tok {
                Tok::Plus => pos += 1,
                Tok::Minus => {
                    negative = !negative;
                    pos += 1;
                }
                _ => break,
            }
        }
        let (term, next) = parse_term(&tokens, pos)?;
        pos = next;
        let coeff = if negative { -term.coeff } else { term.coeff };
        terms.push(Term { coeff, powers: term.powers });
        match tokens.get(pos) {
            None => break,
            Some(Tok::Plus) | Some(Tok::Minus) => {}
            Some(other) => return Err(format!("expected + or - between terms, found {other:?}")),
        }
    }
    Ok(terms)
}

/// Parse one `factor*factor*...` term starting at `pos`.
fn parse_term(tokens: &[Tok], mut pos: usize) -> Result<(Term, usize), String> {
    let mut coeff = BigRational::one();
    let mut powers: BTreeMap<String, i32> = BTreeMap::new();
    loop {
        match tokens.get(pos) {
            Some(Tok::Int(n)) => {
                pos += 1;
                let mut value = BigRational::from_integer(n.clone());
                if let Some(Tok::Slash) = tokens.get(pos) {
                    pos += 1;
                    match tokens.get(pos) {
                        Some(Tok::Int(d)) if !d.is_zero() => {
                            value /= BigRational::from_integer(d.clone());
                            pos += 1;
                        }
                        Some(Tok::Int(_)) => return Err(String::from("zero denominator")),
                        _ => return Err(String::from("expected integer after /")),
                    }
                }
                coeff *= value;
            }
            Some(Tok::Sym(name)) => {
                pos += 1;
                let mut exp = 1i32;
                if let Some(Tok::Caret) = tokens.get(pos) {
                    pos += 1;
                    match tokens.get(pos) {
                        Some(Tok::Int(e)) => {
                            exp = i32::try_from(e.clone())
                                .ok()
                                .filter(|&e| e >= 1)
                                .ok_or_else(|| format!("exponent on {name} must be a positive integer"))?;
                            pos += 1;
                        }
                        _ => return Err(format!("expected integer exponent after {name}^")),
                    }
                }
                *powers.entry(name.clone()).or_insert(0) += exp;
            }
            other => return Err(format!("expected a coefficient or symbol, found {other:?}")),
        }
        match tokens.get(pos) {
            Some(Tok::Star) => pos += 1,
            _ => break,
        }
    }
    Ok((Term { coeff, powers }, pos))
}

#[derive(serde::Deserialize)]
struct FileTerm {
    m: BTreeMap<String, i32>,
    c: String,
}

/// Load a term list from a JSON file.
pub fn load_terms(path: &Path) -> Result<Vec<Term>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("{} is not valid JSON: {e}", path.display()))?;
    let array = match &value {
        serde_json::Value::Array(_) => value.clone(),
        serde_json::Value::Object(map) => map
            .get("terms")
            .cloned()
            .ok_or_else(|| String::from("expected an array of terms or an object with a \"terms\" field"))?,
        _ => return Err(String::from("expected an array of terms or an object with a \"terms\" field")),
    };
    let file_terms: Vec<FileTerm> =
        serde_json::from_value(array).map_err(|e| format!("malformed term list: {e}"))?;
    let mut terms = Vec::with_capacity(file_terms.len());
    for ft in file_terms {
        let coeff = BigRational::from_str(ft.c.trim()).map_err(|e| format!("bad coefficient {:?}: {e}", ft.c))?;
        for (name, &e) in &ft.m {
            if e < 1 {
                return Err(format!("exponent on {name} must be a positive integer"));
            }
        }
        terms.push(Term { coeff, powers: ft.m });
    }
    Ok(terms)
}

/// Assemble parsed terms into a polynomial over `ring`.
pub fn resolve(terms: &[Term], ring: &Arc<GeneratorSet>) -> Result<SparsePoly, String> {
    let mut acc = SparsePoly::zero(ring);
    for term in terms {
        if term.coeff.is_zero() {
            continue;
        }
        let mut pairs = Vec::with_capacity(term.powers.len());
        for (name, &e) in &term.powers {
            let id = ring.id(name).ok_or_else(|| format!("unknown symbol {name}"))?;
            pairs.push((id, e));
        }
        let monomial = Monomial::from_pairs(pairs).map_err(|e| e.to_string())?;
        acc = acc
            .add(&SparsePoly::term(ring, monomial, term.coeff.clone()))
            .map_err(|e| e.to_string())?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(src: &str) -> Vec<(String, String)> {
        parse_poly(src)
            .unwrap()
            .into_iter()
            .map(|t| {
                let mon: Vec<String> =
                    t.powers.iter().map(|(n, e)| format!("{n}^{e}")).collect();
                (t.coeff.to_string(), mon.join("*"))
            })
            .collect()
    }

    #[test]
    fn grammar_round_trips_simple_terms() {
        assert_eq!(
            coeffs("2*b1*z1 + z1^2 - 3/2*z2"),
            vec![
                (String::from("2"), String::from("b1^1*z1^1")),
                (String::from("1"), String::from("z1^2")),
                (String::from("-3/2"), String::from("z2^1")),
            ]
        );
    }

    #[test]
    fn repeated_symbols_accumulate() {
        assert_eq!(coeffs("z1*z1*z1"), vec![(String::from("1"), String::from("z1^3"))]);
    }

    #[test]
    fn zero_literal_parses() {
        let terms = parse_poly("0").unwrap();
        assert_eq!(terms.len(), 1);
        assert!(terms[0].coeff.is_zero());
        assert!(terms[0].powers.is_empty());
    }

    #[test]
    fn double_negation_cancels() {
        assert_eq!(coeffs("- - z1"), vec![(String::from("1"), String::from("z1^1"))]);
    }

    #[test]
    fn junk_is_rejected() {
        assert!(parse_poly("").is_err());
        assert!(parse_poly("z1 z2").is_err());
        assert!(parse_poly("z1^0").is_err());
        assert!(parse_poly("z1^-1").is_err());
        assert!(parse_poly("1/0").is_err());
        assert!(parse_poly("2 @ z1").is_err());
    }
}
