//! Sparse polynomials with exact rational coefficients.
//!
//! Terms live in a `BTreeMap` keyed by [`Monomial`], so iteration order (and
//! therefore every computation downstream) is deterministic.  All series
//! entry points take a [`TruncationBudget`]; plain `add`/`sub` are exact and
//! never drop terms.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::budget::TruncationBudget;
use super::monomial::Monomial;
use super::symbols::{GeneratorSet, SymbolId};
use super::RingError;

use alloc::collections::BTreeMap;

/// A sparse multivariate (Laurent) polynomial over a generator set.
#[derive(Debug, Clone)]
pub struct SparsePoly {
    ring: Arc<GeneratorSet>,
    terms: BTreeMap<Monomial, BigRational>,
}

impl SparsePoly {
    pub fn zero(ring: &Arc<GeneratorSet>) -> Self {
        SparsePoly { ring: ring.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(ring: &Arc<GeneratorSet>, c: BigRational) -> Self {
        let mut p = SparsePoly::zero(ring);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn from_int(ring: &Arc<GeneratorSet>, n: i64) -> Self {
        SparsePoly::constant(ring, BigRational::from_integer(BigInt::from(n)))
    }

    pub fn one(ring: &Arc<GeneratorSet>) -> Self {
        SparsePoly::from_int(ring, 1)
    }

    pub fn variable(ring: &Arc<GeneratorSet>, id: SymbolId) -> Self {
        SparsePoly::term(ring, Monomial::var(id), BigRational::one())
    }

    pub fn term(ring: &Arc<GeneratorSet>, m: Monomial, c: BigRational) -> Self {
        let mut p = SparsePoly::zero(ring);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn ring(&self) -> &Arc<GeneratorSet> {
        &self.ring
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn constant_term(&self) -> BigRational {
        self.coeff(&Monomial::one())
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    /// Re-home the polynomial over a compatible (extending) generator set.
    pub fn into_ring(mut self, ring: &Arc<GeneratorSet>) -> Result<SparsePoly, RingError> {
        let joined = GeneratorSet::join(&self.ring, ring)?;
        self.ring = joined;
        Ok(self)
    }

    fn insert_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            alloc::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            alloc::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &SparsePoly) -> Result<SparsePoly, RingError> {
        let ring = GeneratorSet::join(&self.ring, &other.ring)?;
        let mut out = SparsePoly { ring, terms: self.terms.clone() };
        for (m, c) in &other.terms {
            out.insert_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SparsePoly) -> Result<SparsePoly, RingError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> SparsePoly {
        let terms = self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect();
        SparsePoly { ring: self.ring.clone(), terms }
    }

    pub fn scalar_mul(&self, c: &BigRational) -> SparsePoly {
        if c.is_zero() {
            return SparsePoly::zero(&self.ring);
        }
        let terms = self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect();
        SparsePoly { ring: self.ring.clone(), terms }
    }

    /// Budgeted product.
    pub fn mul(&self, other: &SparsePoly, budget: &TruncationBudget) -> Result<SparsePoly, RingError> {
        let ring = GeneratorSet::join(&self.ring, &other.ring)?;
        let mut out = SparsePoly { ring: ring.clone(), terms: BTreeMap::new() };
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb)?;
                if budget.keeps(&m, &ring) {
                    out.insert_term(m, ca * cb);
                }
            }
        }
        Ok(out)
    }

    /// Budgeted power by binary splitting.
    pub fn pow(&self, k: u32, budget: &TruncationBudget) -> Result<SparsePoly, RingError> {
        let mut acc = SparsePoly::one(&self.ring);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base, budget)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base, budget)?;
            }
        }
        Ok(acc)
    }

    pub fn truncate(&self, budget: &TruncationBudget) -> SparsePoly {
        let terms =
            self.terms.iter().filter(|(m, _)| budget.keeps(m, &self.ring)).map(|(m, c)| (m.clone(), c.clone())).collect();
        SparsePoly { ring: self.ring.clone(), terms }
    }

    /// Largest signed series degree among terms (`None` for the zero
    /// polynomial, whose degree is −∞ by convention).
    pub fn series_degree(&self) -> Option<i64> {
        self.terms.keys().map(|m| m.series_degree(&self.ring)).max()
    }

    /// Smallest signed series degree among terms.
    pub fn series_valuation(&self) -> Option<i64> {
        self.terms.keys().map(|m| m.series_degree(&self.ring)).min()
    }

    /// Largest exponent of `var` present, if any.
    pub fn max_exp(&self, var: SymbolId) -> Option<i32> {
        self.terms.keys().map(|m| m.exp(var)).max()
    }

    pub fn min_exp(&self, var: SymbolId) -> Option<i32> {
        self.terms.keys().map(|m| m.exp(var)).min()
    }

    /// Collect the coefficient of `var^k` (the result no longer involves
    /// `var`).
    pub fn coefficient_of_power(&self, var: SymbolId, k: i32) -> SparsePoly {
        let mut out = SparsePoly::zero(&self.ring);
        for (m, c) in &self.terms {
            if m.exp(var) == k {
                let pairs: Vec<(SymbolId, i32)> = m.iter().filter(|&(id, _)| id != var).collect();
                let stripped = Monomial::from_pairs(pairs).expect("stripping an exponent cannot overflow");
                out.insert_term(stripped, c.clone());
            }
        }
        out
    }

    /// View as a univariate Laurent polynomial in `var` with polynomial
    /// coefficients (which no longer involve `var`).
    pub fn univariate_in(&self, var: SymbolId) -> BTreeMap<i32, SparsePoly> {
        let mut out: BTreeMap<i32, SparsePoly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.exp(var);
            let pairs: Vec<(SymbolId, i32)> = m.iter().filter(|&(id, _)| id != var).collect();
            let stripped = Monomial::from_pairs(pairs).expect("stripping an exponent cannot overflow");
            out.entry(e).or_insert_with(|| SparsePoly::zero(&self.ring)).insert_term(stripped, c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    /// Simultaneous substitution of polynomials for variables.
    ///
    /// Substituting into non-negative exponents is plain composition.  A
    /// variable occurring with negative exponent only accepts values that
    /// are invertible as truncated series; in particular a value with
    /// nonzero constant term (other than a bare unit monomial) is rejected.
    pub fn substitute(
        &self,
        assignments: &[(SymbolId, SparsePoly)],
        budget: &TruncationBudget,
    ) -> Result<SparsePoly, RingError> {
        let mut ring = self.ring.clone();
        for (_, v) in assignments {
            ring = GeneratorSet::join(&ring, &v.ring)?;
        }
        let assigned = |id: SymbolId| assignments.iter().find(|(s, _)| *s == id).map(|(_, v)| v);

        // Per-symbol inverse values, computed lazily.
        let mut inverses: BTreeMap<SymbolId, SparsePoly> = BTreeMap::new();
        // Power cache: (symbol, |exponent|, inverted?) → value^|exponent|.
        let mut powers: BTreeMap<(SymbolId, i32, bool), SparsePoly> = BTreeMap::new();

        let mut out = SparsePoly::zero(&ring);
        for (m, c) in &self.terms {
            let mut kept: Vec<(SymbolId, i32)> = Vec::new();
            let mut factor = SparsePoly::constant(&ring, c.clone());
            for (id, e) in m.iter() {
                let Some(value) = assigned(id) else {
                    kept.push((id, e));
                    continue;
                };
                let (base, inverted) = if e >= 0 {
                    (value.clone(), false)
                } else {
                    let inv = match inverses.get(&id) {
                        Some(v) => v.clone(),
                        None => {
                            let inv = invert_for_substitution(value, id, &ring, budget)?;
                            inverses.insert(id, inv.clone());
                            inv
                        }
                    };
                    (inv, true)
                };
                let k = e.unsigned_abs() as i32;
                let pw = match powers.get(&(id, k, inverted)) {
                    Some(p) => p.clone(),
                    None => {
                        let p = base.into_ring(&ring)?.pow(k as u32, budget)?;
                        powers.insert((id, k, inverted), p.clone());
                        p
                    }
                };
                factor = factor.mul(&pw, budget)?;
            }
            let kept = Monomial::from_pairs(kept)?;
            let kept = SparsePoly::term(&ring, kept, BigRational::one());
            out = out.add(&factor.mul(&kept, budget)?)?;
        }
        Ok(out.truncate(budget))
    }

    /// Multiplicative inverse as a truncated series.
    ///
    /// The element must factor as `c · m · (1 + n)` with `c` a nonzero
    /// rational, `m` a monomial in invertible generators and every term of
    /// `n` of positive series degree; the inverse is the geometric series,
    /// truncated to the budget.
    pub fn invert_series(&self, budget: &TruncationBudget) -> Result<SparsePoly, RingError> {
        let (pivot_m, pivot_c) = self
            .terms
            .iter()
            .min_by(|(ma, _), (mb, _)| {
                ma.series_degree(&self.ring).cmp(&mb.series_degree(&self.ring)).then_with(|| ma.cmp(mb))
            })
            .ok_or(RingError::DivisionByZero)?;
        for (id, _) in pivot_m.iter() {
            if !self.ring.info(id).invertible {
                return Err(RingError::NonInvertible {
                    detail: alloc::format!("pivot term involves non-invertible generator {}", self.ring.name(id)),
                });
            }
        }
        let pivot_m = pivot_m.clone();
        let pivot_c = pivot_c.clone();
        let pivot_inv_m = pivot_m.pow(-1)?;

        // n := self / pivot − 1, which must have positive series degree.
        let mut n = SparsePoly::zero(&self.ring);
        for (m, c) in &self.terms {
            if *m == pivot_m {
                continue;
            }
            let q = m.laurent_div(&pivot_m)?;
            if q.series_degree(&self.ring) < 1 {
                return Err(RingError::NonInvertible {
                    detail: String::from("non-pivot term does not have positive series degree relative to the pivot"),
                });
            }
            n.insert_term(q, c / &pivot_c);
        }

        // (1 + n)^{-1} = Σ (−n)^k, truncated.
        let mut acc = SparsePoly::one(&self.ring);
        let mut pw = SparsePoly::one(&self.ring);
        let neg_n = n.neg();
        while !pw.is_zero() {
            pw = pw.mul(&neg_n, budget)?;
            if pw.is_zero() {
                break;
            }
            acc = acc.add(&pw)?;
        }
        let unit = SparsePoly::term(&self.ring, pivot_inv_m, pivot_c.recip());
        acc.mul(&unit, budget)
    }

    /// Exact division by a nonzero integer.
    ///
    /// Succeeds when no coefficient acquires a denominator prime it did not
    /// already have, so integral inputs must divide integrally and inputs
    /// over a localised ring may only deepen the primes already inverted.
    pub fn exact_divide_integer(&self, n: &BigInt) -> Result<SparsePoly, RingError> {
        if n.is_zero() {
            return Err(RingError::DivisionByZero);
        }
        let divisor = BigRational::from_integer(n.clone());
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let q = c / &divisor;
            let mut fresh = q.denom().abs();
            let old = c.denom().abs();
            loop {
                let g = num_integer::Integer::gcd(&fresh, &old);
                if g.is_one() {
                    break;
                }
                fresh /= g;
            }
            if !fresh.is_one() {
                return Err(RingError::NonIntegralDivision { coefficient: c.to_string(), divisor: n.to_string() });
            }
            terms.insert(m.clone(), q);
        }
        Ok(SparsePoly { ring: self.ring.clone(), terms })
    }

    /// Exact division by a monomial: every term must be divisible
    /// (componentwise exponents ≥), e.g. when a series is known to lie in a
    /// monomial ideal.
    pub fn div_monomial_exact(&self, m: &Monomial) -> Result<SparsePoly, RingError> {
        let mut terms = BTreeMap::new();
        for (mm, c) in &self.terms {
            match mm.checked_div(m) {
                Some(q) => {
                    terms.insert(q, c.clone());
                }
                None => {
                    return Err(RingError::NotDivisible { monomial: display_monomial(&self.ring, mm) });
                }
            }
        }
        Ok(SparsePoly { ring: self.ring.clone(), terms })
    }

    /// Drop terms where `var` appears with exponent above `max` (scaffold
    /// truncation for auxiliary variables that the series cap does not
    /// bound).
    pub fn truncate_var_above(&self, var: SymbolId, max: i32) -> SparsePoly {
        let terms = self.terms.iter().filter(|(m, _)| m.exp(var) <= max).map(|(m, c)| (m.clone(), c.clone())).collect();
        SparsePoly { ring: self.ring.clone(), terms }
    }

    /// Terms in the canonical print order (exponent-sum graded, then
    /// name-lexicographic); this is the order serialisers must use.
    pub fn sorted_terms(&self) -> Vec<(&Monomial, &BigRational)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|(a, _), (b, _)| canonical_monomial_order(&self.ring, a, b));
        v
    }

    /// Structural invariants of every stored term.
    pub fn check_invariants(&self) -> Result<(), RingError> {
        for (m, c) in &self.terms {
            m.check_invariants(&self.ring)?;
            if c.is_zero() {
                return Err(RingError::NonInvertible { detail: String::from("zero coefficient stored") });
            }
        }
        Ok(())
    }
}

/// Canonical deterministic order on monomials of one ring: graded by raw
/// exponent sum, ties broken lexicographically on (symbol name, exponent)
/// sequences.
pub fn canonical_monomial_order(ring: &GeneratorSet, a: &Monomial, b: &Monomial) -> Ordering {
    match a.exponent_sum().cmp(&b.exponent_sum()) {
        Ordering::Equal => {}
        o => return o,
    }
    let key = |m: &Monomial| {
        let mut v: Vec<(&str, i32)> = m.iter().map(|(id, e)| (ring.name(id), e)).collect();
        v.sort_by(|x, y| x.0.cmp(y.0));
        v.into_iter().map(|(n, e)| (n.to_string(), e)).collect::<Vec<_>>()
    };
    key(a).cmp(&key(b))
}

fn invert_for_substitution(
    value: &SparsePoly,
    target: SymbolId,
    ring: &Arc<GeneratorSet>,
    budget: &TruncationBudget,
) -> Result<SparsePoly, RingError> {
    // A bare unit monomial (constant, β·…, …) inverts directly.
    if value.num_terms() == 1 {
        if let Ok(inv) = value.invert_series(budget) {
            return Ok(inv);
        }
    }
    if !value.constant_term().is_zero() {
        return Err(RingError::SubstituteIntoNegative { symbol: String::from(ring.name(target)) });
    }
    value.invert_series(budget)
}

fn display_monomial(ring: &GeneratorSet, m: &Monomial) -> String {
    if m.is_one() {
        return String::from("1");
    }
    let mut parts: Vec<(&str, i32)> = m.iter().map(|(id, e)| (ring.name(id), e)).collect();
    parts.sort_by(|x, y| x.0.cmp(y.0));
    let mut s = String::new();
    for (i, (name, e)) in parts.iter().enumerate() {
        if i > 0 {
            s.push('*');
        }
        s.push_str(name);
        if *e != 1 {
            s.push('^');
            s.push_str(&e.to_string());
        }
    }
    s
}

impl PartialEq for SparsePoly {
    fn eq(&self, other: &Self) -> bool {
        (self.ring.extends(&other.ring) || other.ring.extends(&self.ring)) && self.terms == other.terms
    }
}

impl Eq for SparsePoly {}

impl core::fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.sorted_terms().into_iter().enumerate() {
            let neg = c.is_negative();
            let abs = if neg { -c.clone() } else { c.clone() };
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{}", display_monomial(&self.ring, m))?;
            } else {
                write!(f, "{abs}*{}", display_monomial(&self.ring, m))?;
            }
        }
        Ok(())
    }
}
