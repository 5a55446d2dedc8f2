//! Discrete Taylor calculus for maps that need not be additive.
//!
//! For a map `f` between additive value spaces the discrete derivative
//! `∂f(a₁, a₂) = f(a₁+a₂) − f(a₁) − f(a₂)` measures the failure of
//! additivity; iterating it in the first slot gives `∂^q f` with `q+1`
//! distinguished slots.  Everything in this module is an *identity for
//! arbitrary maps* — no polynomiality is assumed:
//!
//! * [`iterated_derivative`] uses the inclusion–exclusion closed form
//!   `∂^q f(x₀..x_q) = Σ_{∅≠S} (−1)^{q+1−|S|} f(x_S)`;
//! * [`taylor_expand`] reconstructs `f(Σ x)` from derivatives over the
//!   subset lattice of the summand family;
//! * [`chain_rule_residual`] evaluates both sides of the composition rule
//!   for `g∘f` over the two-level lattice [`IndexFamily`];
//! * [`lift_test`] checks the subgroup-lifting criterion `∂f(A′, A) = 0`.
//!
//! [`MapBox`] is the black-box carrier: any reentrant closure from slices of
//! [`SparsePoly`] values to a value.  Polynomial maps are wrapped via
//! [`MapBox::from_poly`]; genuinely non-polynomial maps (lookup tables,
//! coefficient normalizers) get the same treatment.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand_core::{RngCore, SeedableRng};

use crate::ring::{GeneratorSet, Monomial, RingError, SparsePoly, SymbolId, TruncationBudget};

/// Errors from discrete-calculus evaluations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaylorError {
    Ring(RingError),
    /// A map was handed the wrong number of arguments.
    Arity { expected: usize, got: usize },
    /// An operation that needs at least one summand got none.
    EmptyFamily,
    /// The index family is larger than the combinatorial cap allows.
    FamilyTooLarge { size: usize, cap: usize },
    /// A black-box evaluation reported a failure of its own.
    Eval(String),
}

impl From<RingError> for TaylorError {
    fn from(e: RingError) -> Self {
        TaylorError::Ring(e)
    }
}

impl core::fmt::Display for TaylorError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TaylorError::Ring(e) => write!(f, "{e}"),
            TaylorError::Arity { expected, got } => write!(f, "map expected {expected} arguments, got {got}"),
            TaylorError::EmptyFamily => write!(f, "summand family is empty"),
            TaylorError::FamilyTooLarge { size, cap } => {
                write!(f, "index family of size {size} exceeds the combinatorial cap {cap}")
            }
            TaylorError::Eval(msg) => write!(f, "evaluation failed: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TaylorError {}

type EvalFn = dyn Fn(&[SparsePoly]) -> Result<SparsePoly, TaylorError> + Send + Sync;

/// A deterministic, reentrant map from tuples of values to a value.
#[derive(Clone)]
pub struct MapBox {
    pub label: String,
    pub arity: usize,
    ring: Arc<GeneratorSet>,
    eval: Arc<EvalFn>,
}

impl core::fmt::Debug for MapBox {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MapBox").field("label", &self.label).field("arity", &self.arity).finish()
    }
}

impl MapBox {
    /// Wrap an arbitrary closure.  `ring` is the value ring used for zero
    /// outputs of degenerate derivatives.
    pub fn new<F>(label: &str, arity: usize, ring: &Arc<GeneratorSet>, eval: F) -> Self
    where
        F: Fn(&[SparsePoly]) -> Result<SparsePoly, TaylorError> + Send + Sync + 'static,
    {
        MapBox { label: String::from(label), arity, ring: ring.clone(), eval: Arc::new(eval) }
    }

    /// The polynomial map `(v₁,…,v_r) ↦ p[slotᵢ := vᵢ]`.
    pub fn from_poly(label: &str, p: &SparsePoly, slots: &[SymbolId], budget: &TruncationBudget) -> Self {
        let p = p.clone();
        let slots: Vec<SymbolId> = slots.to_vec();
        let budget = budget.clone();
        let arity = slots.len();
        let ring = p.ring().clone();
        MapBox::new(label, arity, &ring, move |args| {
            let assignments: Vec<(SymbolId, SparsePoly)> =
                slots.iter().copied().zip(args.iter().cloned()).collect();
            Ok(p.substitute(&assignments, &budget)?)
        })
    }

    /// The constant-zero map of the given arity.
    pub fn zero(label: &str, arity: usize, ring: &Arc<GeneratorSet>) -> Self {
        let zring = ring.clone();
        MapBox::new(label, arity, ring, move |_| Ok(SparsePoly::zero(&zring)))
    }

    /// `g ∘ f` for unary `g`.
    pub fn compose(g: &MapBox, f: &MapBox) -> Result<MapBox, TaylorError> {
        if g.arity != 1 {
            return Err(TaylorError::Arity { expected: 1, got: g.arity });
        }
        let g2 = g.clone();
        let f2 = f.clone();
        Ok(MapBox::new(
            &format!("{}∘{}", g.label, f.label),
            f.arity,
            &g.ring,
            move |args| {
                let mid = f2.eval(args)?;
                g2.eval(&[mid])
            },
        ))
    }

    pub fn ring(&self) -> &Arc<GeneratorSet> {
        &self.ring
    }

    pub fn eval(&self, args: &[SparsePoly]) -> Result<SparsePoly, TaylorError> {
        if args.len() != self.arity {
            return Err(TaylorError::Arity { expected: self.arity, got: args.len() });
        }
        (self.eval)(args)
    }
}

/// Single discrete derivative in the first slot:
/// `∂f(a₁, a₂, rest…) = f(a₁+a₂, rest) − f(a₁, rest) − f(a₂, rest)`.
pub fn derivative(f: &MapBox) -> MapBox {
    let inner = f.clone();
    MapBox::new(&format!("∂{}", f.label), f.arity + 1, &f.ring, move |args| {
        let (a, b) = (&args[0], &args[1]);
        let rest = &args[2..];
        let mut merged = vec![a.add(b)?];
        merged.extend_from_slice(rest);
        let s = inner.eval(&merged)?;
        merged[0] = a.clone();
        let fa = inner.eval(&merged)?;
        merged[0] = b.clone();
        let fb = inner.eval(&merged)?;
        Ok(s.sub(&fa)?.sub(&fb)?)
    })
}

/// Sum of `args[i]` over the set bits of `mask`.
fn subset_sum(args: &[SparsePoly], mask: u32) -> Result<SparsePoly, TaylorError> {
    let mut acc: Option<SparsePoly> = None;
    for (i, a) in args.iter().enumerate() {
        if mask & (1 << i) != 0 {
            acc = Some(match acc {
                Some(s) => s.add(a)?,
                None => a.clone(),
            });
        }
    }
    acc.ok_or(TaylorError::EmptyFamily)
}

/// `∂^q f` with the `q+1` distinguished slots first, evaluated through the
/// inclusion–exclusion closed form; `q = −1` is the zero map.
pub fn iterated_derivative(f: &MapBox, q: i32) -> MapBox {
    if q < 0 {
        return MapBox::zero(&format!("∂^{q}{}", f.label), 0, &f.ring);
    }
    let inner = f.clone();
    let slots = (q + 1) as usize;
    MapBox::new(&format!("∂^{q}{}", f.label), f.arity + q as usize, &f.ring, move |args| {
        let distinguished = &args[..slots];
        let rest = &args[slots..];
        let mut acc = SparsePoly::zero(&inner.ring);
        for mask in 1u32..(1 << slots) {
            let x = subset_sum(distinguished, mask)?;
            let mut call = vec![x];
            call.extend_from_slice(rest);
            let v = inner.eval(&call)?;
            if (slots - mask.count_ones() as usize) % 2 == 0 {
                acc = acc.add(&v)?;
            } else {
                acc = acc.sub(&v)?;
            }
        }
        Ok(acc)
    })
}

/// The two-level subset lattice over a finite key set: `M₁` is the nonempty
/// subsets of `M₀` (as bitmasks over key positions), `M₂` the nonempty
/// families of such subsets together with their supports.  Built eagerly at
/// construction and immutable afterwards, so a family can be shared
/// read-only across threads.
#[derive(Debug, Clone)]
pub struct IndexFamily {
    labels: Vec<String>,
    m1: Vec<u32>,
}

/// `M₂` enumeration stays feasible only for tiny `M₀`.
pub const FAMILY_CAP: usize = 3;

impl IndexFamily {
    pub fn new(labels: &[&str]) -> Self {
        let n = labels.len();
        assert!(n <= 31, "index family too large for bitmask representation");
        let m1 = (1u32..(1 << n)).collect();
        let fam = IndexFamily { labels: labels.iter().map(|s| s.to_string()).collect(), m1 };
        debug_assert_eq!(fam.m1.len(), (1usize << n) - 1);
        fam
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Nonempty subsets of `M₀`, as bitmasks, in increasing order.
    pub fn m1(&self) -> &[u32] {
        &self.m1
    }

    /// Nonempty families `J₂ ⊆ M₁`, each as a list of `M₁` masks.  Guarded
    /// by [`FAMILY_CAP`] — the count is `2^(2^|M₀|−1) − 1`.
    pub fn m2(&self) -> Result<Vec<Vec<u32>>, TaylorError> {
        if self.len() > FAMILY_CAP {
            return Err(TaylorError::FamilyTooLarge { size: self.len(), cap: FAMILY_CAP });
        }
        let mut out = Vec::new();
        for sel in 1u32..(1 << self.m1.len()) {
            out.push(self.family_of(sel));
        }
        Ok(out)
    }

    fn family_of(&self, sel: u32) -> Vec<u32> {
        self.m1
            .iter()
            .enumerate()
            .filter(|&(i, _)| sel & (1 << i) != 0)
            .map(|(_, &mask)| mask)
            .collect()
    }
}

/// Union of the masks in a family — `Supp(J₂)`.
pub fn support(family: &[u32]) -> u32 {
    family.iter().fold(0, |a, m| a | m)
}

/// Discrete Taylor expansion of `f` over a summand family:
/// `Σ_{∅≠J} ∂^{|J|−1}f(x_j | j∈J, rest)`.  Equality with `f(Σ x, rest)` is
/// an identity for arbitrary maps; each derivative term is evaluated
/// independently so the comparison genuinely exercises the cancellation.
pub fn taylor_expand(f: &MapBox, summands: &[SparsePoly], rest: &[SparsePoly]) -> Result<SparsePoly, TaylorError> {
    if summands.is_empty() {
        return Err(TaylorError::EmptyFamily);
    }
    let n = summands.len();
    let mut total = SparsePoly::zero(&f.ring);
    for j in 1u32..(1 << n) {
        let picked: Vec<SparsePoly> =
            summands.iter().enumerate().filter(|&(i, _)| j & (1 << i) != 0).map(|(_, s)| s.clone()).collect();
        let q = picked.len() as i32 - 1;
        let d = iterated_derivative(f, q);
        let mut args = picked;
        args.extend_from_slice(rest);
        total = total.add(&d.eval(&args)?)?;
    }
    Ok(total)
}

/// Left side minus right side of the discrete chain rule for `g∘f` on the
/// full index set of `inputs`:
///
/// `∂^{n−1}(g∘f)(x) − Σ_{J₂: Supp(J₂)=M₀} ∂^{|J₂|−1}g( ∂^{|J₁′|−1}f(x|_{J₁′}) | J₁′∈J₂ )`.
///
/// Must vanish identically.  Inner evaluations are memoized by subset mask —
/// the arguments of repeated calls coincide exactly, so caching is purely an
/// evaluation-count optimization.
pub fn chain_rule_residual(f: &MapBox, g: &MapBox, inputs: &[SparsePoly]) -> Result<SparsePoly, TaylorError> {
    if f.arity != 1 || g.arity != 1 {
        return Err(TaylorError::Arity { expected: 1, got: f.arity.max(g.arity) });
    }
    if inputs.is_empty() {
        return Err(TaylorError::EmptyFamily);
    }
    let n = inputs.len();
    if n > FAMILY_CAP {
        return Err(TaylorError::FamilyTooLarge { size: n, cap: FAMILY_CAP });
    }
    let full: u32 = (1 << n) - 1;

    // f on every subset sum of the inputs.
    let mut f_on: BTreeMap<u32, SparsePoly> = BTreeMap::new();
    for s in 1..=full {
        f_on.insert(s, f.eval(&[subset_sum(inputs, s)?])?);
    }

    // Left side: closed form of ∂^{n−1}(g∘f).
    let mut lhs = SparsePoly::zero(&g.ring);
    for s in 1..=full {
        let v = g.eval(&[f_on[&s].clone()])?;
        if (n - s.count_ones() as usize) % 2 == 0 {
            lhs = lhs.add(&v)?;
        } else {
            lhs = lhs.sub(&v)?;
        }
    }

    // Derivatives of f on each J₁′ via the same closed form.
    let mut df: BTreeMap<u32, SparsePoly> = BTreeMap::new();
    for j1p in 1..=full {
        let k = j1p.count_ones() as usize;
        let mut acc = SparsePoly::zero(&f.ring);
        let mut s = j1p;
        loop {
            // s runs over nonempty submasks of j1p.
            let v = &f_on[&s];
            if (k - s.count_ones() as usize) % 2 == 0 {
                acc = acc.add(v)?;
            } else {
                acc = acc.sub(v)?;
            }
            s = (s - 1) & j1p;
            if s == 0 {
                break;
            }
        }
        df.insert(j1p, acc);
    }

    // g on every sum of derivative values over a family T ⊆ M₁, memoized by
    // the family's selector mask.
    let m1: Vec<u32> = (1..=full).collect();
    let mut g_on: BTreeMap<u32, SparsePoly> = BTreeMap::new();
    let g_of = |sel: u32, g_on: &mut BTreeMap<u32, SparsePoly>| -> Result<SparsePoly, TaylorError> {
        if let Some(v) = g_on.get(&sel) {
            return Ok(v.clone());
        }
        let mut arg: Option<SparsePoly> = None;
        for (i, &mask) in m1.iter().enumerate() {
            if sel & (1 << i) != 0 {
                let dv = &df[&mask];
                arg = Some(match arg {
                    Some(a) => a.add(dv)?,
                    None => dv.clone(),
                });
            }
        }
        let v = g.eval(&[arg.ok_or(TaylorError::EmptyFamily)?])?;
        g_on.insert(sel, v.clone());
        Ok(v)
    };

    // Right side: Σ over J₂ with full support of the closed form of
    // ∂^{|J₂|−1}g over the derivative values.
    let mut rhs = SparsePoly::zero(&g.ring);
    for sel in 1u32..(1 << m1.len()) {
        let mut supp = 0u32;
        for (i, &mask) in m1.iter().enumerate() {
            if sel & (1 << i) != 0 {
                supp |= mask;
            }
        }
        if supp != full {
            continue;
        }
        let card = sel.count_ones() as usize;
        // Nonempty sub-selections T ⊆ J₂.
        let mut t = sel;
        loop {
            let v = g_of(t, &mut g_on)?;
            if (card - t.count_ones() as usize) % 2 == 0 {
                rhs = rhs.add(&v)?;
            } else {
                rhs = rhs.sub(&v)?;
            }
            t = (t - 1) & sel;
            if t == 0 {
                break;
            }
        }
    }

    Ok(lhs.sub(&rhs)?)
}

/// Subgroup-lifting criterion: `∂f(a′, a) = 0` for `a′` ranging over random
/// small-integer combinations of `subgroup_gens` and `a` over `samples`.
pub fn lift_test(
    f: &MapBox,
    subgroup_gens: &[SparsePoly],
    samples: &[SparsePoly],
    count: usize,
    seed: u64,
) -> Result<bool, TaylorError> {
    if f.arity != 1 {
        return Err(TaylorError::Arity { expected: 1, got: f.arity });
    }
    if subgroup_gens.is_empty() || samples.is_empty() {
        return Err(TaylorError::EmptyFamily);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let df = derivative(f);
    for i in 0..count {
        let mut a_prime = SparsePoly::zero(&f.ring);
        for g in subgroup_gens {
            let c = (rng.next_u32() % 7) as i64 - 3;
            if c != 0 {
                a_prime = a_prime.add(&g.scalar_mul(&BigRational::from_integer(BigInt::from(c))))?;
            }
        }
        let a = &samples[i % samples.len()];
        if !df.eval(&[a_prime, a.clone()])?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of a randomized identity suite.
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub instances: usize,
    pub failures: usize,
    pub first_witness: Option<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Draw a random polynomial in `vars`: up to `max_terms` monomials of total
/// degree ≤ `max_degree` with nonzero integer coefficients bounded by
/// `coeff_bound`.
pub fn random_polynomial(
    ring: &Arc<GeneratorSet>,
    vars: &[SymbolId],
    max_degree: u32,
    max_terms: usize,
    coeff_bound: u32,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> SparsePoly {
    let mut p = SparsePoly::zero(ring);
    let terms = 1 + (rng.next_u32() as usize) % max_terms;
    for _ in 0..terms {
        let deg = rng.next_u32() % (max_degree + 1);
        let mut exps: BTreeMap<SymbolId, i32> = BTreeMap::new();
        for _ in 0..deg {
            let v = vars[(rng.next_u32() as usize) % vars.len()];
            *exps.entry(v).or_insert(0) += 1;
        }
        let m = Monomial::from_pairs(exps).expect("small exponents");
        let mag = 1 + rng.next_u32() % coeff_bound;
        let sign: i64 = if rng.next_u32() % 2 == 0 { 1 } else { -1 };
        let c = BigRational::from_integer(BigInt::from(sign * mag as i64));
        p = p.add(&SparsePoly::term(ring, m, c)).expect("same ring");
    }
    p
}

/// Like [`random_polynomial`] but with the constant term removed, for use
/// as a series argument.
pub fn random_zero_constant(
    ring: &Arc<GeneratorSet>,
    vars: &[SymbolId],
    max_degree: u32,
    max_terms: usize,
    coeff_bound: u32,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> SparsePoly {
    let p = random_polynomial(ring, vars, max_degree, max_terms, coeff_bound, rng);
    let c = p.constant_term();
    if c.is_zero() {
        p
    } else {
        p.sub(&SparsePoly::constant(ring, c)).expect("same ring")
    }
}

fn suite_ring() -> (Arc<GeneratorSet>, SymbolId, Vec<SymbolId>) {
    let mut g = GeneratorSet::new();
    let w = g.series("w");
    let xs = vec![g.series("x1"), g.series("x2"), g.series("x3")];
    (g.freeze(), w, xs)
}

/// Randomized Taylor-expansion suite: polynomial maps of degree ≤ 4 against
/// direct evaluation of `f(Σ x)`.
pub fn dte_suite(instances: usize, seed: u64) -> Result<SuiteOutcome, TaylorError> {
    let (ring, w, xs) = suite_ring();
    let budget = TruncationBudget::unbounded();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut first_witness = None;
    for i in 0..instances {
        let fp = random_polynomial(&ring, &[w], 4, 4, 9, &mut rng);
        let f = MapBox::from_poly("f", &fp, &[w], &budget);
        let n = 2 + i % 2;
        let summands: Vec<SparsePoly> =
            (0..n).map(|_| random_polynomial(&ring, &xs, 2, 3, 3, &mut rng)).collect();
        let expanded = taylor_expand(&f, &summands, &[])?;
        let mut total = SparsePoly::zero(&ring);
        for s in &summands {
            total = total.add(s)?;
        }
        let direct = f.eval(&[total])?;
        if expanded != direct {
            failures += 1;
            if first_witness.is_none() {
                first_witness = Some(format!("instance {i}: f = {fp}, summands = {summands:?}"));
            }
        }
    }
    Ok(SuiteOutcome { instances, failures, first_witness })
}

/// Randomized chain-rule suite: residual of the composition rule for random
/// polynomial pairs, index sets of size ≤ 3.
pub fn chain_suite(instances: usize, seed: u64) -> Result<SuiteOutcome, TaylorError> {
    let (ring, w, xs) = suite_ring();
    let budget = TruncationBudget::unbounded();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut first_witness = None;
    for i in 0..instances {
        let n = 1 + i % 3;
        // Degree is budgeted by |M₀|: the family lattice over three summands
        // already multiplies evaluation counts by ~3^7, so the top joint
        // degree appears on the sparser lattices and periodically at n = 3.
        let (df_max, dg_max) = match n {
            1 | 2 => (4, 4),
            _ => {
                if i % 101 == 2 {
                    (4, 4)
                } else if i % 2 == 1 {
                    (4, 2)
                } else {
                    (2, 4)
                }
            }
        };
        let fp = random_polynomial(&ring, &[w], df_max, 3, 5, &mut rng);
        let gp = random_polynomial(&ring, &[w], dg_max, 3, 5, &mut rng);
        let f = MapBox::from_poly("f", &fp, &[w], &budget);
        let g = MapBox::from_poly("g", &gp, &[w], &budget);
        let inputs: Vec<SparsePoly> = (0..n)
            .map(|j| {
                let c = BigRational::from_integer(BigInt::from(1 + (rng.next_u32() % 2) as i64));
                SparsePoly::variable(&ring, xs[j]).scalar_mul(&c)
            })
            .collect();
        let residual = chain_rule_residual(&f, &g, &inputs)?;
        if !residual.is_zero() {
            failures += 1;
            if first_witness.is_none() {
                first_witness = Some(format!("instance {i}: f = {fp}, g = {gp}, n = {n}"));
            }
        }
    }
    Ok(SuiteOutcome { instances, failures, first_witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn test_ring() -> (Arc<GeneratorSet>, SymbolId, Vec<SymbolId>) {
        suite_ring()
    }

    fn poly_map(p: &SparsePoly, w: SymbolId) -> MapBox {
        MapBox::from_poly("f", p, &[w], &TruncationBudget::unbounded())
    }

    fn wpow(ring: &Arc<GeneratorSet>, w: SymbolId, k: i32) -> SparsePoly {
        SparsePoly::term(ring, Monomial::var(w).pow(k).unwrap(), BigRational::one())
    }

    #[test]
    fn derivative_of_square_is_twice_the_product() {
        let (ring, w, xs) = test_ring();
        let f = poly_map(&wpow(&ring, w, 2), w);
        let df = derivative(&f);
        let (a, b) = (SparsePoly::variable(&ring, xs[0]), SparsePoly::variable(&ring, xs[1]));
        let got = df.eval(&[a.clone(), b.clone()]).unwrap();
        let want = a.mul(&b, &TruncationBudget::unbounded()).unwrap().scalar_mul(&q(2));
        assert_eq!(got, want);
    }

    #[test]
    fn derivative_of_additive_map_vanishes() {
        let (ring, w, xs) = test_ring();
        let f = poly_map(&SparsePoly::variable(&ring, w).scalar_mul(&q(3)), w);
        let df = derivative(&f);
        let args = [SparsePoly::variable(&ring, xs[0]), SparsePoly::variable(&ring, xs[1])];
        assert!(df.eval(&args).unwrap().is_zero());
    }

    #[test]
    fn derivative_of_cube() {
        let (ring, w, xs) = test_ring();
        let f = poly_map(&wpow(&ring, w, 3), w);
        let df = derivative(&f);
        let (a, b) = (SparsePoly::variable(&ring, xs[0]), SparsePoly::variable(&ring, xs[1]));
        let got = df.eval(&[a.clone(), b.clone()]).unwrap();
        // 3ab(a+b)
        let big = TruncationBudget::unbounded();
        let want = a.mul(&b, &big).unwrap().mul(&a.add(&b).unwrap(), &big).unwrap().scalar_mul(&q(3));
        assert_eq!(got, want);
    }

    #[test]
    fn second_derivative_of_cube_is_six_abc() {
        let (ring, w, xs) = test_ring();
        let f = poly_map(&wpow(&ring, w, 3), w);
        let d2 = iterated_derivative(&f, 2);
        let args: Vec<SparsePoly> = xs.iter().map(|&v| SparsePoly::variable(&ring, v)).collect();
        let got = d2.eval(&args).unwrap();
        let big = TruncationBudget::unbounded();
        let want = args[0].mul(&args[1], &big).unwrap().mul(&args[2], &big).unwrap().scalar_mul(&q(6));
        assert_eq!(got, want);
    }

    #[test]
    fn vanishing_order_matches_polynomial_degree() {
        let (ring, w, xs) = test_ring();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for d in 1..=4i32 {
            let f = poly_map(&wpow(&ring, w, d), w);
            // ∂^d f ≡ 0 …
            let dd = iterated_derivative(&f, d);
            let args: Vec<SparsePoly> =
                (0..=d).map(|_| random_polynomial(&ring, &xs, 2, 2, 3, &mut rng)).collect();
            assert!(dd.eval(&args).unwrap().is_zero(), "degree {d}");
            // … while ∂^{d−1} f is not the zero map (witness: all slots x1).
            let dprev = iterated_derivative(&f, d - 1);
            let ones: Vec<SparsePoly> = (0..d).map(|_| SparsePoly::variable(&ring, xs[0])).collect();
            assert!(!dprev.eval(&ones).unwrap().is_zero(), "degree {d}");
        }
    }

    #[test]
    fn negative_order_derivative_is_zero() {
        let (ring, w, _) = test_ring();
        let f = poly_map(&wpow(&ring, w, 2), w);
        let dm = iterated_derivative(&f, -1);
        assert_eq!(dm.arity, 0);
        assert!(dm.eval(&[]).unwrap().is_zero());
    }

    #[test]
    fn closed_form_matches_recursive_definition() {
        let (ring, w, xs) = test_ring();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let fp = random_polynomial(&ring, &[w], 4, 4, 5, &mut rng);
        let f = poly_map(&fp, w);
        for quse in 1..=2i32 {
            let closed = iterated_derivative(&f, quse);
            let mut rec = f.clone();
            for _ in 0..quse {
                rec = derivative(&rec);
            }
            let args: Vec<SparsePoly> =
                (0..=quse).map(|_| random_polynomial(&ring, &xs, 2, 2, 3, &mut rng)).collect();
            assert_eq!(closed.eval(&args).unwrap(), rec.eval(&args).unwrap(), "q = {quse}");
        }
    }

    #[test]
    fn iterated_derivative_is_symmetric() {
        let (ring, w, xs) = test_ring();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let fp = random_polynomial(&ring, &[w], 4, 4, 5, &mut rng);
        let f = poly_map(&fp, w);
        let d2 = iterated_derivative(&f, 2);
        let a: Vec<SparsePoly> = (0..3).map(|_| random_polynomial(&ring, &xs, 2, 2, 3, &mut rng)).collect();
        let base = d2.eval(&a).unwrap();
        for perm in [[1usize, 0, 2], [2, 1, 0], [1, 2, 0], [0, 2, 1], [2, 0, 1]] {
            let permuted: Vec<SparsePoly> = perm.iter().map(|&i| a[i].clone()).collect();
            assert_eq!(d2.eval(&permuted).unwrap(), base);
        }
    }

    #[test]
    fn taylor_expansion_of_square_two_summands() {
        let (ring, w, xs) = test_ring();
        let f = poly_map(&wpow(&ring, w, 2), w);
        let (a, b) = (SparsePoly::variable(&ring, xs[0]), SparsePoly::variable(&ring, xs[1]));
        let got = taylor_expand(&f, &[a.clone(), b.clone()], &[]).unwrap();
        let big = TruncationBudget::unbounded();
        // f(x₁) + f(x₂) + 2x₁x₂
        let want = f
            .eval(&[a.clone()])
            .unwrap()
            .add(&f.eval(&[b.clone()]).unwrap())
            .unwrap()
            .add(&a.mul(&b, &big).unwrap().scalar_mul(&q(2)))
            .unwrap();
        assert_eq!(got, want);
        assert_eq!(got, f.eval(&[a.add(&b).unwrap()]).unwrap());
    }

    /// A genuinely non-polynomial map: square, then clamp every coefficient
    /// into {0,1} by reducing its numerator modulo 2.  The expansion
    /// identity must hold for it all the same.
    #[test]
    fn taylor_expansion_for_a_lookup_style_map() {
        let (ring, _, xs) = test_ring();
        let rr = ring.clone();
        let weird = MapBox::new("sq-mod-2", 1, &ring, move |args| {
            let sq = args[0].mul(&args[0], &TruncationBudget::unbounded())?;
            let mut out = SparsePoly::zero(&rr);
            for (m, c) in sq.iter() {
                assert!(c.denom().is_one(), "lookup map expects integer coefficients");
                let r = ((c.numer() % BigInt::from(2)) + BigInt::from(2)) % BigInt::from(2);
                if !r.is_zero() {
                    out = out.add(&SparsePoly::term(&rr, m.clone(), BigRational::from_integer(r)))?;
                }
            }
            Ok(out)
        });
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..25 {
            let summands: Vec<SparsePoly> =
                (0..3).map(|_| random_polynomial(&ring, &xs, 2, 3, 4, &mut rng)).collect();
            let expanded = taylor_expand(&weird, &summands, &[]).unwrap();
            let total = summands.iter().skip(1).fold(summands[0].clone(), |a, s| a.add(s).unwrap());
            assert_eq!(expanded, weird.eval(&[total]).unwrap());
        }
    }

    #[test]
    fn chain_rule_for_squares() {
        let (ring, w, xs) = test_ring();
        let f = poly_map(&wpow(&ring, w, 2), w);
        let g = poly_map(&wpow(&ring, w, 2), w);
        let inputs = [SparsePoly::variable(&ring, xs[0]), SparsePoly::variable(&ring, xs[1])];
        assert!(chain_rule_residual(&f, &g, &inputs).unwrap().is_zero());
    }

    #[test]
    fn chain_rule_rejects_oversized_families() {
        let (ring, w, xs) = test_ring();
        let f = poly_map(&wpow(&ring, w, 2), w);
        let inputs: Vec<SparsePoly> = (0..4)
            .map(|i| SparsePoly::variable(&ring, xs[i % 3]))
            .collect();
        assert!(matches!(
            chain_rule_residual(&f, &f, &inputs),
            Err(TaylorError::FamilyTooLarge { .. })
        ));
    }

    #[test]
    fn index_family_counts() {
        let fam = IndexFamily::new(&["a", "b", "c"]);
        assert_eq!(fam.m1().len(), 7);
        assert_eq!(fam.m2().unwrap().len(), 127);
        assert_eq!(support(&[0b011, 0b100]), 0b111);
        let big = IndexFamily::new(&["a", "b", "c", "d"]);
        assert_eq!(big.m1().len(), 15);
        assert!(matches!(big.m2(), Err(TaylorError::FamilyTooLarge { .. })));
    }

    #[test]
    fn lifting_criterion_examples() {
        let (ring, w, xs) = test_ring();
        let sq = wpow(&ring, w, 2);
        let two = SparsePoly::constant(&ring, q(2));
        let samples: Vec<SparsePoly> =
            vec![SparsePoly::one(&ring), SparsePoly::variable(&ring, xs[0]), SparsePoly::constant(&ring, q(3))];

        // x² into the coefficients-mod-2 world: ∂f(2k, a) = 4ka ≡ 0.
        let rr = ring.clone();
        let sq2 = sq.clone();
        let mod2 = MapBox::new("sq-mod-2", 1, &ring, move |args| {
            let v = sq2.substitute(&[(w, args[0].clone())], &TruncationBudget::unbounded())?;
            let mut out = SparsePoly::zero(&rr);
            for (m, c) in v.iter() {
                let r = ((c.numer() % BigInt::from(2)) + BigInt::from(2)) % BigInt::from(2);
                if !r.is_zero() {
                    out = out.add(&SparsePoly::term(&rr, m.clone(), BigRational::from_integer(r)))?;
                }
            }
            Ok(out)
        });
        assert!(lift_test(&mod2, &[two.clone()], &samples, 40, 23).unwrap());

        // The same square into the untouched target: ∂f(2, 1) = 4 ≠ 0.
        let plain = poly_map(&sq, w);
        assert!(!lift_test(&plain, &[two], &samples, 40, 23).unwrap());

        // Additive maps always lift.
        let add = poly_map(&SparsePoly::variable(&ring, w).scalar_mul(&q(5)), w);
        let gens = [SparsePoly::constant(&ring, q(2)), SparsePoly::variable(&ring, xs[1])];
        assert!(lift_test(&add, &gens, &samples, 40, 23).unwrap());
    }

    #[test]
    fn suites_pass_smoke_counts() {
        let dte = dte_suite(25, 1).unwrap();
        assert_eq!(dte.failures, 0, "witness: {:?}", dte.first_witness);
        let chain = chain_suite(9, 2).unwrap();
        assert_eq!(chain.failures, 0, "witness: {:?}", chain.first_witness);
    }
}
