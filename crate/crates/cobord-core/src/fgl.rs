//! One-dimensional commutative formal group laws and their series calculus.
//!
//! A [`FormalGroupLaw`] packages the law `F(x, y)` together with its
//! exponential and logarithm (both may have rational coefficients; the law
//! itself must be integral for the universal model), the distinguished
//! residue parameter `t`, and the truncation cap it was built at.  On top of
//! that this module provides:
//!
//! * [`series_reversion`] — compositional inversion with invertible leading
//!   coefficient;
//! * formal sums, inverses and `n`-series (binary splitting);
//! * the normalised invariant differential `ω(t) = (∂F/∂y)(t, 0)^{-1}`,
//!   the unique translation-invariant 1-form density with `ω(0) = 1`;
//! * [`LaurentSeries`] — series in `t` bounded below, with unit inversion
//!   and the residue functional `h ↦ [t^{-1}] (h · ω)`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::ring::{GeneratorSet, Monomial, RingError, SparsePoly, SymbolId, TruncationBudget};

/// Errors from formal-group-law computations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FglError {
    Ring(RingError),
    /// Formal sums and n-series only accept arguments with zero constant
    /// term.
    NonzeroConstantTerm,
    /// The series handed to reversion is not `c·x + O(x²)` with invertible
    /// `c`.
    BadReversionInput { detail: String },
    /// Laurent arithmetic needs an explicit floor on the parameter.
    FloorRequired,
    /// A fixed-point iteration failed to make progress (kernel bug).
    IterationDiverged { detail: String },
}

impl From<RingError> for FglError {
    fn from(e: RingError) -> Self {
        FglError::Ring(e)
    }
}

impl core::fmt::Display for FglError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FglError::Ring(e) => write!(f, "{e}"),
            FglError::NonzeroConstantTerm => write!(f, "formal series argument has nonzero constant term"),
            FglError::BadReversionInput { detail } => write!(f, "cannot revert series: {detail}"),
            FglError::FloorRequired => write!(f, "Laurent arithmetic requires a floor on the parameter"),
            FglError::IterationDiverged { detail } => write!(f, "series iteration diverged: {detail}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FglError {}

/// A formal group law with its series environment.
#[derive(Debug, Clone)]
pub struct FormalGroupLaw {
    pub ring: Arc<GeneratorSet>,
    pub name: String,
    /// First law variable.
    pub x: SymbolId,
    /// Second law variable.
    pub y: SymbolId,
    /// Residue / operation parameter (registered invertible).
    pub t: SymbolId,
    /// `F(x, y)` truncated to total series degree `cap`.
    pub f: SparsePoly,
    /// Exponential `e(x) = x + …` (rational coefficients allowed).
    pub exp: SparsePoly,
    /// Logarithm `ℓ(x)`, compositional inverse of `exp`.
    pub log: SparsePoly,
    /// Density of the normalised invariant differential, `ω(0) = 1`.
    pub omega: SparsePoly,
    pub cap: i64,
}

impl FormalGroupLaw {
    /// Budget matching the construction cap (no Laurent floor).
    pub fn budget(&self) -> TruncationBudget {
        TruncationBudget::series(self.cap)
    }

    /// Budget with a Laurent floor of `k` on the parameter `t`.
    pub fn budget_with_floor(&self, k: i64) -> TruncationBudget {
        self.budget().with_floor(self.t, k)
    }

    /// `a +_F b`.  Both arguments must have zero constant term.
    pub fn formal_sum(&self, a: &SparsePoly, b: &SparsePoly, budget: &TruncationBudget) -> Result<SparsePoly, FglError> {
        if !a.constant_term().is_zero() || !b.constant_term().is_zero() {
            return Err(FglError::NonzeroConstantTerm);
        }
        Ok(self.f.substitute(&[(self.x, a.clone()), (self.y, b.clone())], budget)?)
    }

    /// The formal inverse: the unique `i(s)` with `F(s, i(s)) = 0`.
    pub fn formal_inverse(&self, s: &SparsePoly, budget: &TruncationBudget) -> Result<SparsePoly, FglError> {
        if !s.constant_term().is_zero() {
            return Err(FglError::NonzeroConstantTerm);
        }
        let mut inv = s.neg();
        let mut last_val: Option<i64> = None;
        for _ in 0..(budget.series_cap + 3) {
            let r = self.formal_sum(s, &inv, budget)?;
            if r.is_zero() {
                return Ok(inv);
            }
            let val = r.series_valuation();
            if val == last_val {
                return Err(FglError::IterationDiverged { detail: String::from("formal inverse stalled") });
            }
            last_val = val;
            inv = inv.sub(&r)?;
        }
        // One final residual check: at this point the error term has been
        // pushed beyond every degree the budget keeps.
        let r = self.formal_sum(s, &inv, budget)?;
        if r.is_zero() {
            Ok(inv)
        } else {
            Err(FglError::IterationDiverged { detail: String::from("formal inverse did not converge") })
        }
    }

    /// `a −_F b = a +_F (formal inverse of b)`.
    pub fn formal_diff(&self, a: &SparsePoly, b: &SparsePoly, budget: &TruncationBudget) -> Result<SparsePoly, FglError> {
        let nb = self.formal_inverse(b, budget)?;
        self.formal_sum(a, &nb, budget)
    }

    /// `[n]·_F s` by binary splitting (negative `n` via the formal inverse).
    pub fn n_series(&self, n: i64, s: &SparsePoly, budget: &TruncationBudget) -> Result<SparsePoly, FglError> {
        if n < 0 {
            let pos = self.n_series(-n, s, budget)?;
            return self.formal_inverse(&pos, budget);
        }
        if n == 0 {
            return Ok(SparsePoly::zero(s.ring()));
        }
        if n == 1 {
            return Ok(s.clone());
        }
        let half = self.n_series(n / 2, s, budget)?;
        let dbl = self.formal_sum(&half, &half, budget)?;
        if n % 2 == 1 {
            self.formal_sum(&dbl, s, budget)
        } else {
            Ok(dbl)
        }
    }

    /// Normalised invariant differential `ω(t) = (∂F/∂y)(t, 0)^{-1}`.
    pub fn invariant_differential(&self, budget: &TruncationBudget) -> Result<SparsePoly, FglError> {
        // ∂F/∂y at y = 0 is the coefficient of y¹ in F, as a series in x.
        let dy = self.f.coefficient_of_power(self.y, 1);
        let g = dy.substitute(&[(self.x, SparsePoly::variable(&self.ring, self.t))], budget)?;
        Ok(g.invert_series(budget)?)
    }

    /// `ℓ′(t)` — equal to the invariant differential whenever the logarithm
    /// exists, which gives an independent cross-check.
    pub fn log_derivative(&self, budget: &TruncationBudget) -> Result<SparsePoly, FglError> {
        let dl = derivative_univariate(&self.log, self.x)?;
        Ok(dl.substitute(&[(self.x, SparsePoly::variable(&self.ring, self.t))], budget)?)
    }

    /// `[t^{-1}] (h · ω)` for this law's differential density.
    pub fn residue(&self, h: &LaurentSeries, budget: &TruncationBudget) -> Result<SparsePoly, FglError> {
        h.residue(&self.omega, budget)
    }
}

/// Formal derivative of a polynomial with respect to one variable.
pub fn derivative_univariate(p: &SparsePoly, var: SymbolId) -> Result<SparsePoly, RingError> {
    let mut out = SparsePoly::zero(p.ring());
    for (m, c) in p.iter() {
        let e = m.exp(var);
        if e == 0 {
            continue;
        }
        let mut pairs: Vec<(SymbolId, i32)> = m.iter().filter(|&(id, _)| id != var).collect();
        if e != 1 {
            pairs.push((var, e - 1));
        }
        let dm = Monomial::from_pairs(pairs)?;
        let dc = c * BigRational::from_integer(BigInt::from(e));
        out = out.add(&SparsePoly::term(p.ring(), dm, dc))?;
    }
    Ok(out)
}

/// Compositional inverse of `s = c·var + O(var²)` where `c` must be
/// invertible (as a truncated series in the other variables).  The result
/// `g` satisfies `s(g(u)) = u` up to the budget, with `var` playing the role
/// of `u`, and is computed degree by degree up to `var_degree`.
pub fn generalized_reversion(
    s: &SparsePoly,
    var: SymbolId,
    var_degree: i32,
    budget: &TruncationBudget,
) -> Result<SparsePoly, FglError> {
    if !s.constant_term().is_zero() || !s.coefficient_of_power(var, 0).is_zero() {
        return Err(FglError::BadReversionInput { detail: String::from("constant term in the reversion variable") });
    }
    let c0 = s.coefficient_of_power(var, 1);
    if c0.is_zero() {
        return Err(FglError::BadReversionInput { detail: String::from("vanishing linear coefficient") });
    }
    let c0_inv = c0.invert_series(budget).map_err(|e| FglError::BadReversionInput { detail: e.to_string() })?;
    let v = SparsePoly::variable(s.ring(), var);
    let mut g = c0_inv.mul(&v, budget)?;
    for k in 2..=var_degree {
        let composed = s.substitute(&[(var, g.clone())], budget)?.truncate_var_above(var, var_degree);
        let err = composed.sub(&v)?;
        let ck = err.coefficient_of_power(var, k);
        if ck.is_zero() {
            continue;
        }
        let vk = SparsePoly::term(s.ring(), Monomial::var(var).pow(k)?, BigRational::one());
        let corr = c0_inv.mul(&ck, budget)?.mul(&vk, budget)?;
        g = g.sub(&corr)?;
    }
    Ok(g)
}

/// Compositional inverse of `s = var + O(var²)` up to the budget cap.
pub fn series_reversion(s: &SparsePoly, var: SymbolId, budget: &TruncationBudget) -> Result<SparsePoly, FglError> {
    let lead = s.coefficient_of_power(var, 1);
    if !lead.is_constant() || !lead.constant_term().is_one() {
        return Err(FglError::BadReversionInput { detail: String::from("leading coefficient is not 1") });
    }
    generalized_reversion(s, var, budget.series_cap.min(i32::MAX as i64) as i32, budget)
}

fn base_ring(coefficients: &[(&str, i64, bool)]) -> (Arc<GeneratorSet>, SymbolId, SymbolId, SymbolId) {
    let mut g = GeneratorSet::new();
    for &(name, degree, inv) in coefficients {
        if inv {
            g.coefficient_invertible(name, degree);
        } else {
            g.coefficient(name, degree);
        }
    }
    let x = g.series("x");
    let y = g.series("y");
    let t = g.series_invertible("t");
    (g.freeze(), x, y, t)
}

/// The universal law over `ℤ[b₁, …, b_N]`: the exponential is
/// `e(x) = x + b₁x² + … ` and `F = e(ℓ(x) + ℓ(y))`.  Requires `N ≥ D`; the
/// resulting `F` must be integral — a violation is a kernel bug and panics.
pub fn make_universal(n_gens: usize, cap: i64) -> FormalGroupLaw {
    assert!(n_gens as i64 >= cap, "universal law needs at least as many generators as the degree cap");
    assert!(cap >= 1);
    let mut g = GeneratorSet::new();
    for i in 1..=n_gens {
        g.coefficient(&alloc::format!("b{i}"), -(i as i64));
    }
    let x = g.series("x");
    let y = g.series("y");
    let t = g.series_invertible("t");
    let ring = g.freeze();
    let budget = TruncationBudget::series(cap);

    let mut exp = SparsePoly::variable(&ring, x);
    for i in 1..=n_gens {
        let deg = (i + 1) as i64;
        if deg > cap {
            break;
        }
        let bi = ring.id(&alloc::format!("b{i}")).expect("generator just registered");
        let m = Monomial::from_pairs([(bi, 1), (x, (i + 1) as i32)]).expect("small exponents");
        exp = exp.add(&SparsePoly::term(&ring, m, BigRational::one())).expect("same ring");
    }
    let log = series_reversion(&exp, x, &budget).expect("universal exponential reverts");
    let log_y = log.substitute(&[(x, SparsePoly::variable(&ring, y))], &budget).expect("rename");
    let sum = log.add(&log_y).expect("same ring");
    let f = exp.substitute(&[(x, sum)], &budget).expect("compose");

    for (m, c) in f.iter() {
        assert!(
            c.denom().is_one(),
            "universal law lost integrality at {:?}: coefficient {} (kernel bug)",
            m,
            c
        );
    }
    let omega = SparsePoly::one(&ring);
    let mut law = FormalGroupLaw { ring, name: String::from("universal"), x, y, t, f, exp, log, omega, cap };
    law.omega = law.invariant_differential(&budget).expect("universal law has a unit y-linear part");
    debug_assert!(law_unit_ok(&law, &budget));
    law
}

/// The additive law `F(x, y) = x + y` over `ℤ`.
pub fn make_additive(cap: i64) -> FormalGroupLaw {
    let (ring, x, y, t) = base_ring(&[]);
    let f = SparsePoly::variable(&ring, x).add(&SparsePoly::variable(&ring, y)).expect("same ring");
    let exp = SparsePoly::variable(&ring, x);
    let omega = SparsePoly::one(&ring);
    FormalGroupLaw { ring, name: String::from("additive"), x, y, t, f, exp: exp.clone(), log: exp, omega, cap }
}

/// The multiplicative law `F(x, y) = x + y − βxy` over `ℤ[β, β^{-1}]`.
///
/// Exponential and logarithm have the classical rational coefficients
/// `e(u) = Σ (−β)^{k−1} u^k / k!` and `ℓ(x) = Σ β^{k−1} x^k / k`.
pub fn make_multiplicative(cap: i64) -> FormalGroupLaw {
    let (ring, x, y, t) = base_ring(&[("beta", -1, true)]);
    let beta = ring.id("beta").expect("registered");
    let budget = TruncationBudget::series(cap);

    let bx = Monomial::from_pairs([(beta, 1), (x, 1), (y, 1)]).expect("small exponents");
    let f = SparsePoly::variable(&ring, x)
        .add(&SparsePoly::variable(&ring, y))
        .and_then(|s| s.sub(&SparsePoly::term(&ring, bx, BigRational::one())))
        .expect("same ring");

    let mut exp = SparsePoly::zero(&ring);
    let mut factorial = BigInt::one();
    for k in 1..=cap.max(1) {
        factorial *= BigInt::from(k);
        let m = Monomial::from_pairs([(beta, (k - 1) as i32), (x, k as i32)]).expect("small exponents");
        let sign = if (k - 1) % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        let c = BigRational::new(sign, factorial.clone());
        exp = exp.add(&SparsePoly::term(&ring, m, c)).expect("same ring");
    }
    let log = series_reversion(&exp, x, &budget).expect("multiplicative exponential reverts");
    let omega = SparsePoly::one(&ring);
    let mut law = FormalGroupLaw { ring, name: String::from("multiplicative"), x, y, t, f, exp, log, omega, cap };
    law.omega = law.invariant_differential(&budget).expect("1 − βt is a unit series");
    debug_assert!(law_unit_ok(&law, &budget));
    law
}

fn law_unit_ok(law: &FormalGroupLaw, budget: &TruncationBudget) -> bool {
    let x = SparsePoly::variable(&law.ring, law.x);
    let zero = SparsePoly::zero(&law.ring);
    match law.formal_sum(&x, &zero, budget) {
        Ok(s) => s == x,
        Err(_) => false,
    }
}

/// A series in the parameter `t` with `t`-free polynomial coefficients and
/// exponents bounded below.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentSeries {
    ring: Arc<GeneratorSet>,
    t: SymbolId,
    coeffs: BTreeMap<i64, SparsePoly>,
}

impl LaurentSeries {
    pub fn zero(ring: &Arc<GeneratorSet>, t: SymbolId) -> Self {
        LaurentSeries { ring: ring.clone(), t, coeffs: BTreeMap::new() }
    }

    /// Split a polynomial by its powers of `t`.
    pub fn from_poly(p: &SparsePoly, t: SymbolId) -> Self {
        let coeffs = p.univariate_in(t).into_iter().map(|(e, c)| (e as i64, c)).collect();
        LaurentSeries { ring: p.ring().clone(), t, coeffs }
    }

    /// Reassemble into a single polynomial (exponents must fit `i32`).
    pub fn to_poly(&self) -> SparsePoly {
        let mut out = SparsePoly::zero(&self.ring);
        for (e, c) in &self.coeffs {
            let tm = Monomial::var(self.t).pow(*e as i32).expect("exponent fits");
            let tp = SparsePoly::term(&self.ring, tm, BigRational::one());
            // Coefficients are t-free so an unbounded budget is safe here.
            out = out.add(&c.mul(&tp, &TruncationBudget::unbounded()).expect("same ring")).expect("same ring");
        }
        out
    }

    pub fn ring(&self) -> &Arc<GeneratorSet> {
        &self.ring
    }

    pub fn parameter(&self) -> SymbolId {
        self.t
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, e: i64) -> SparsePoly {
        self.coeffs.get(&e).cloned().unwrap_or_else(|| SparsePoly::zero(&self.ring))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i64, &SparsePoly)> {
        self.coeffs.iter()
    }

    pub fn min_exponent(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exponent(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    fn normalized(mut self) -> Self {
        self.coeffs.retain(|_, c| !c.is_zero());
        self
    }

    pub fn add(&self, other: &LaurentSeries) -> Result<LaurentSeries, FglError> {
        assert_eq!(self.t, other.t, "Laurent parameters differ");
        let ring = GeneratorSet::join(&self.ring, &other.ring)?;
        let mut coeffs = self.coeffs.clone();
        for (e, c) in &other.coeffs {
            let cur = coeffs.remove(e);
            let sum = match cur {
                Some(p) => p.add(c)?,
                None => c.clone(),
            };
            if !sum.is_zero() {
                coeffs.insert(*e, sum);
            }
        }
        Ok(LaurentSeries { ring, t: self.t, coeffs })
    }

    pub fn sub(&self, other: &LaurentSeries) -> Result<LaurentSeries, FglError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> LaurentSeries {
        let coeffs = self.coeffs.iter().map(|(e, c)| (*e, c.neg())).collect();
        LaurentSeries { ring: self.ring.clone(), t: self.t, coeffs }
    }

    pub fn scalar_mul(&self, c: &BigRational) -> LaurentSeries {
        let coeffs = self.coeffs.iter().map(|(e, p)| (*e, p.scalar_mul(c))).collect();
        LaurentSeries { ring: self.ring.clone(), t: self.t, coeffs: coeffs }.normalized()
    }

    fn floor_of(&self, budget: &TruncationBudget) -> Result<i64, FglError> {
        match budget.laurent_floor {
            Some((s, k)) if s == self.t => Ok(k),
            _ => Err(FglError::FloorRequired),
        }
    }

    /// Budget for the `t`-free coefficient at exponent `e`: the full term
    /// will carry `t^e`, which contributes `e` to the signed series degree.
    fn coeff_budget(budget: &TruncationBudget, e: i64) -> TruncationBudget {
        TruncationBudget {
            series_cap: budget.series_cap - e,
            coefficient_cap: budget.coefficient_cap,
            laurent_floor: None,
        }
    }

    pub fn mul(&self, other: &LaurentSeries, budget: &TruncationBudget) -> Result<LaurentSeries, FglError> {
        assert_eq!(self.t, other.t, "Laurent parameters differ");
        let floor = self.floor_of(budget)?;
        let ring = GeneratorSet::join(&self.ring, &other.ring)?;
        let mut coeffs: BTreeMap<i64, SparsePoly> = BTreeMap::new();
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &other.coeffs {
                let e = ea + eb;
                if e < -floor {
                    continue;
                }
                let prod = ca.mul(cb, &Self::coeff_budget(budget, e))?;
                if prod.is_zero() {
                    continue;
                }
                let cur = coeffs.remove(&e);
                let sum = match cur {
                    Some(p) => p.add(&prod)?,
                    None => prod,
                };
                if !sum.is_zero() {
                    coeffs.insert(e, sum);
                }
            }
        }
        Ok(LaurentSeries { ring, t: self.t, coeffs })
    }

    pub fn mul_poly(&self, p: &SparsePoly, budget: &TruncationBudget) -> Result<LaurentSeries, FglError> {
        self.mul(&LaurentSeries::from_poly(p, self.t), budget)
    }

    /// Invert a Laurent unit.
    ///
    /// The pivot exponent is the lowest `e` whose coefficient is invertible
    /// as a truncated series; everything below the pivot must consist of
    /// terms of positive series degree (truncation-nilpotent), which is what
    /// makes expressions like `t +_F μ` invertible even though their lowest
    /// coefficient is a bare variable.
    pub fn invert(&self, budget: &TruncationBudget) -> Result<LaurentSeries, FglError> {
        let floor = self.floor_of(budget)?;
        let mut pivot: Option<(i64, SparsePoly)> = None;
        for (e, c) in &self.coeffs {
            match c.invert_series(&Self::coeff_budget(budget, -e)) {
                Ok(inv) => {
                    pivot = Some((*e, inv));
                    break;
                }
                Err(_) => {
                    if c.series_valuation().unwrap_or(1) < 1 {
                        return Err(FglError::Ring(RingError::NonInvertible {
                            detail: String::from("sub-pivot coefficient is not truncation-nilpotent"),
                        }));
                    }
                }
            }
        }
        let (m, p_inv) = pivot.ok_or(FglError::Ring(RingError::NonInvertible {
            detail: String::from("no invertible pivot coefficient"),
        }))?;

        // h = P t^m (1 + R)  ⇒  h^{-1} = P^{-1} t^{-m} Σ (−R)^k.  The Σ part
        // still awaits a shift by t^{-m}, so it is accumulated under a budget
        // shifted by m in both directions.
        let inner = TruncationBudget {
            series_cap: budget.series_cap + m,
            coefficient_cap: budget.coefficient_cap,
            laurent_floor: Some((self.t, floor - m)),
        };
        let mut r = LaurentSeries::zero(&self.ring, self.t);
        for (e, c) in &self.coeffs {
            if *e == m {
                let rem = c.mul(&p_inv, &Self::coeff_budget(&inner, 0))?.sub(&SparsePoly::one(&self.ring))?;
                if !rem.is_zero() {
                    r.coeffs.insert(0, rem);
                }
                continue;
            }
            let shifted = c.mul(&p_inv, &Self::coeff_budget(&inner, e - m))?;
            if !shifted.is_zero() {
                r.coeffs.insert(e - m, shifted);
            }
        }
        let mut acc = LaurentSeries::zero(&self.ring, self.t);
        acc.coeffs.insert(0, SparsePoly::one(&self.ring));
        let mut pw = acc.clone();
        let neg_r = r.neg();
        let guard = 4 * (inner.series_cap.abs() + floor.abs() + m.abs() + 4);
        let mut k = 0;
        while !pw.is_zero() {
            pw = pw.mul(&neg_r, &inner)?;
            if pw.is_zero() {
                break;
            }
            acc = acc.add(&pw)?;
            k += 1;
            if k > guard {
                return Err(FglError::IterationDiverged { detail: String::from("Laurent inversion did not terminate") });
            }
        }
        let mut unit = LaurentSeries::zero(&self.ring, self.t);
        unit.coeffs.insert(-m, p_inv);
        acc.mul(&unit, budget)
    }

    /// Terms with exponent ≤ 0.
    pub fn nonpositive_part(&self) -> LaurentSeries {
        let coeffs = self.coeffs.iter().filter(|(e, _)| **e <= 0).map(|(e, c)| (*e, c.clone())).collect();
        LaurentSeries { ring: self.ring.clone(), t: self.t, coeffs }
    }

    /// Terms with exponent ≥ 1.
    pub fn positive_part(&self) -> LaurentSeries {
        let coeffs = self.coeffs.iter().filter(|(e, _)| **e >= 1).map(|(e, c)| (*e, c.clone())).collect();
        LaurentSeries { ring: self.ring.clone(), t: self.t, coeffs }
    }

    pub fn truncate(&self, budget: &TruncationBudget) -> Result<LaurentSeries, FglError> {
        let floor = self.floor_of(budget)?;
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(e, _)| **e >= -floor)
            .map(|(e, c)| (*e, c.truncate(&Self::coeff_budget(budget, *e))))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        Ok(LaurentSeries { ring: self.ring.clone(), t: self.t, coeffs })
    }

    /// The residue `[t^{-1}] (self · ω)` against a differential density
    /// `ω(t)` (pass `1` for the bare coefficient).
    pub fn residue(&self, omega: &SparsePoly, budget: &TruncationBudget) -> Result<SparsePoly, FglError> {
        Ok(self.mul_poly(omega, budget)?.coeff(-1))
    }
}
