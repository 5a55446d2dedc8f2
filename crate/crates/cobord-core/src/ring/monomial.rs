//! Exponent vectors.
//!
//! A [`Monomial`] is a sorted list of `(SymbolId, exponent)` pairs with all
//! exponents nonzero.  The derived `Ord` (lexicographic on the sorted pair
//! list) is what keeps polynomial term maps deterministic; the human-facing
//! graded order lives with the polynomial printer, which has access to
//! symbol names.

use alloc::vec::Vec;

use super::symbols::{GeneratorSet, SymbolKind};
use super::{RingError, SymbolId};

/// A Laurent monomial: product of generators raised to nonzero powers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    exps: Vec<(SymbolId, i32)>,
}

impl Monomial {
    /// The empty product.
    pub fn one() -> Self {
        Monomial { exps: Vec::new() }
    }

    pub fn var(id: SymbolId) -> Self {
        Monomial { exps: alloc::vec![(id, 1)] }
    }

    /// Build from arbitrary pairs: merges duplicates, drops zeros, sorts.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (SymbolId, i32)>) -> Result<Self, RingError> {
        let mut exps: Vec<(SymbolId, i32)> = Vec::new();
        for (id, e) in pairs {
            match exps.iter_mut().find(|(i, _)| *i == id) {
                Some((_, acc)) => *acc = acc.checked_add(e).ok_or(RingError::ExponentOverflow)?,
                None => exps.push((id, e)),
            }
        }
        exps.retain(|&(_, e)| e != 0);
        exps.sort_unstable_by_key(|&(id, _)| id);
        Ok(Monomial { exps })
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exp(&self, id: SymbolId) -> i32 {
        self.exps.iter().find(|(i, _)| *i == id).map(|&(_, e)| e).unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (SymbolId, i32)> + '_ {
        self.exps.iter().copied()
    }

    /// Merge two monomials (exponents add).
    pub fn mul(&self, other: &Monomial) -> Result<Monomial, RingError> {
        let mut exps = Vec::with_capacity(self.exps.len() + other.exps.len());
        let (mut i, mut j) = (0, 0);
        while i < self.exps.len() && j < other.exps.len() {
            let (ia, ea) = self.exps[i];
            let (ib, eb) = other.exps[j];
            if ia < ib {
                exps.push((ia, ea));
                i += 1;
            } else if ib < ia {
                exps.push((ib, eb));
                j += 1;
            } else {
                let e = ea.checked_add(eb).ok_or(RingError::ExponentOverflow)?;
                if e != 0 {
                    exps.push((ia, e));
                }
                i += 1;
                j += 1;
            }
        }
        exps.extend_from_slice(&self.exps[i..]);
        exps.extend_from_slice(&other.exps[j..]);
        Ok(Monomial { exps })
    }

    pub fn pow(&self, k: i32) -> Result<Monomial, RingError> {
        let mut exps = Vec::with_capacity(self.exps.len());
        for &(id, e) in &self.exps {
            let e = e.checked_mul(k).ok_or(RingError::ExponentOverflow)?;
            if e != 0 {
                exps.push((id, e));
            }
        }
        Ok(Monomial { exps })
    }

    /// Exact quotient `self / other`, or `None` when some exponent would go
    /// negative on a generator `other` does not fully cancel.  (Used for
    /// monomial-ideal membership, where "divisible" means componentwise ≥.)
    pub fn checked_div(&self, other: &Monomial) -> Option<Monomial> {
        let mut exps = Vec::with_capacity(self.exps.len());
        let mut j = 0;
        for &(id, e) in &self.exps {
            while j < other.exps.len() && other.exps[j].0 < id {
                return None; // other has a generator self lacks
            }
            if j < other.exps.len() && other.exps[j].0 == id {
                let d = e - other.exps[j].1;
                if d < 0 {
                    return None;
                }
                if d != 0 {
                    exps.push((id, d));
                }
                j += 1;
            } else {
                exps.push((id, e));
            }
        }
        if j < other.exps.len() {
            return None;
        }
        Some(Monomial { exps })
    }

    /// Unchecked Laurent quotient: exponents subtract, negatives allowed.
    pub fn laurent_div(&self, other: &Monomial) -> Result<Monomial, RingError> {
        self.mul(&other.pow(-1)?)
    }

    /// Signed total degree over series generators (the series cap counts
    /// this; a negative Laurent exponent lowers it).
    pub fn series_degree(&self, ring: &GeneratorSet) -> i64 {
        self.exps
            .iter()
            .filter(|&&(id, _)| ring.info(id).kind == SymbolKind::Series)
            .map(|&(id, e)| e as i64 * ring.info(id).degree)
            .sum()
    }

    /// Non-negative weight of the coefficient part: each coefficient
    /// generator counts with the absolute value of its degree.
    pub fn coefficient_weight(&self, ring: &GeneratorSet) -> i64 {
        self.exps
            .iter()
            .filter(|&&(id, _)| ring.info(id).kind == SymbolKind::Coefficient)
            .map(|&(id, e)| e.unsigned_abs() as i64 * ring.info(id).degree.abs())
            .sum()
    }

    /// Total graded degree (series + coefficient, with their signs).
    pub fn graded_degree(&self, ring: &GeneratorSet) -> i64 {
        self.exps.iter().map(|&(id, e)| e as i64 * ring.info(id).degree).sum()
    }

    /// Raw exponent sum, used as the grading of the canonical print order.
    pub fn exponent_sum(&self) -> i64 {
        self.exps.iter().map(|&(_, e)| e as i64).sum()
    }

    /// Split into (coefficient part, series part) by generator kind.
    pub fn split_kinds(&self, ring: &GeneratorSet) -> (Monomial, Monomial) {
        let mut coeff = Vec::new();
        let mut series = Vec::new();
        for &(id, e) in &self.exps {
            match ring.info(id).kind {
                SymbolKind::Coefficient => coeff.push((id, e)),
                SymbolKind::Series => series.push((id, e)),
            }
        }
        (Monomial { exps: coeff }, Monomial { exps: series })
    }

    /// Structural invariants: sorted unique ids, nonzero exponents, negative
    /// exponents confined to invertible generators, all ids known.
    pub fn check_invariants(&self, ring: &GeneratorSet) -> Result<(), RingError> {
        for w in self.exps.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(RingError::NonInvertible { detail: alloc::string::String::from("unsorted monomial") });
            }
        }
        for &(id, e) in &self.exps {
            if id as usize >= ring.len() {
                return Err(RingError::UnknownSymbol(alloc::format!("#{id}")));
            }
            if e == 0 {
                return Err(RingError::NonInvertible { detail: alloc::string::String::from("zero exponent stored") });
            }
            if e < 0 && !ring.info(id).invertible {
                return Err(RingError::NegativeExponent { symbol: alloc::string::String::from(ring.name(id)) });
            }
        }
        Ok(())
    }
}
