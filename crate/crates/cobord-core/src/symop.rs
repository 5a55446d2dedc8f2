//! The total power operation at a prime and the symmetric operation it
//! hides below degree zero.
//!
//! Fix a prime `p` and representatives `ī = (i₁,…,i_{p−1})` of the nonzero
//! residues mod `p`.  The total operation `St(ī)` is the multiplicative
//! transformation with variable action `γ(x) = x·∏_j (x +_F [i_j]·t)` and
//! the matching twist on the exponential coefficients; its value lands in
//! series with finitely many negative powers of the parameter `t`.  The
//! difference `□^p − St(ī)` is divisible by the formal multiplier
//! `[p] = (p·_F t)/t` in nonpositive `t`-degrees, with an integral
//! quotient once the product of the representatives is inverted.
//! [`divide_by_formal_p`] performs that division by exact back-substitution
//! from the lowest exponent upward, [`symmetric_phi`] packages the whole
//! pipeline into the operation `Φ(ī)` with its positive-degree residual,
//! and [`verify_phi`] checks existence, residual positivity, and the
//! uniqueness of the quotient on a list of inputs.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::fgl::{FglError, FormalGroupLaw, LaurentSeries};
use crate::projops::{twisted_coefficient_map, OpsError, Repr, Transformation};
use crate::ring::{Monomial, RingError, SparsePoly, SymbolKind, TruncationBudget};

/// Errors from configuration, evaluation, and the exact division.
#[derive(Debug, Clone)]
pub enum SymopError {
    Ring(RingError),
    Fgl(FglError),
    Ops(OpsError),
    /// The prime/representative data or the working precision is unusable.
    BadConfig { detail: String },
    /// An exact division step failed; `exponent` is the `t`-degree at which
    /// the quotient stopped being integral.
    Division { exponent: i64, detail: String },
}

impl From<RingError> for SymopError {
    fn from(e: RingError) -> Self {
        SymopError::Ring(e)
    }
}

impl From<FglError> for SymopError {
    fn from(e: FglError) -> Self {
        SymopError::Fgl(e)
    }
}

impl From<OpsError> for SymopError {
    fn from(e: OpsError) -> Self {
        SymopError::Ops(e)
    }
}

impl core::fmt::Display for SymopError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SymopError::Ring(e) => write!(f, "{e}"),
            SymopError::Fgl(e) => write!(f, "{e}"),
            SymopError::Ops(e) => write!(f, "{e}"),
            SymopError::BadConfig { detail } => write!(f, "bad configuration: {detail}"),
            SymopError::Division { exponent, detail } => {
                write!(f, "division failed at t^{exponent}: {detail}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SymopError {}

/// A prime together with representatives of its nonzero residue classes.
/// The product of the representatives is the only constant the operations
/// ever need inverted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SteenrodConfig {
    pub p: i64,
    pub reps: Vec<i64>,
}

fn is_prime(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl SteenrodConfig {
    /// Default representatives `1, …, p−1`.
    pub fn new(p: i64) -> Result<Self, SymopError> {
        SteenrodConfig::with_reps(p, (1..p).collect())
    }

    /// Custom representatives: one for each nonzero residue class mod `p`.
    pub fn with_reps(p: i64, reps: Vec<i64>) -> Result<Self, SymopError> {
        if !is_prime(p) {
            return Err(SymopError::BadConfig { detail: format!("{p} is not prime") });
        }
        if reps.len() as i64 != p - 1 {
            return Err(SymopError::BadConfig {
                detail: format!("{} representatives supplied for {} residue classes", reps.len(), p - 1),
            });
        }
        let mut seen = Vec::new();
        for &r in &reps {
            let residue = r.rem_euclid(p);
            if residue == 0 {
                return Err(SymopError::BadConfig { detail: format!("representative {r} is divisible by {p}") });
            }
            if seen.contains(&residue) {
                return Err(SymopError::BadConfig {
                    detail: format!("representative {r} repeats the residue class {residue}"),
                });
            }
            seen.push(residue);
        }
        Ok(SteenrodConfig { p, reps })
    }

    /// The product of the representatives — the constant inverted in the
    /// value ring of the operations.
    pub fn rep_product(&self) -> i64 {
        self.reps.iter().product()
    }
}

/// The variable action of the total operation:
/// `γ(x) = x·∏_j (x +_F [i_j]·t)`, a series of `x`-valuation 1 whose
/// linear coefficient is the product of the multiplier series `[i_j]·t`.
pub fn gamma_st(
    config: &SteenrodConfig,
    law: &FormalGroupLaw,
    budget: &TruncationBudget,
) -> Result<SparsePoly, SymopError> {
    let x = SparsePoly::variable(&law.ring, law.x);
    let t = SparsePoly::variable(&law.ring, law.t);
    let mut out = x.clone();
    for &i in &config.reps {
        let multiple = law.n_series(i, &t, budget)?;
        let factor = law.formal_sum(&x, &multiple, budget)?;
        out = out.mul(&factor, budget)?;
    }
    Ok(out)
}

/// The generators the law's exponential actually carries: `b_i` appears in
/// a cap-`c` exponential only for `i + 1 ≤ c`, so deeper ring generators
/// have no computable image and are left out.
fn exponential_gens(law: &FormalGroupLaw) -> Vec<crate::ring::SymbolId> {
    let mut out = Vec::new();
    let mut i = 1i64;
    while i + 1 <= law.cap {
        match law.ring.id(&format!("b{i}")) {
            Some(id) => out.push(id),
            None => break,
        }
        i += 1;
    }
    out
}

/// The total operation `St(ī)` as a multiplicative transformation: every
/// series variable goes through [`gamma_st`] and every exponential
/// generator through the induced coefficient twist.  The budget must allow
/// negative powers of `t` deep enough for the twisted coefficients in use.
pub fn steenrod_total(
    config: &SteenrodConfig,
    law: &Arc<FormalGroupLaw>,
    budget: &TruncationBudget,
) -> Result<Transformation, SymopError> {
    steenrod_with_gens(config, law, &exponential_gens(law), budget)
}

/// [`steenrod_total`] with the coefficient twist restricted to a prefix of
/// the exponential generators — enough for inputs that only mention those,
/// and far cheaper than normalizing the full composite.
fn steenrod_with_gens(
    config: &SteenrodConfig,
    law: &Arc<FormalGroupLaw>,
    gens: &[crate::ring::SymbolId],
    budget: &TruncationBudget,
) -> Result<Transformation, SymopError> {
    let gamma = gamma_st(config, law, budget)?;
    let phi = twisted_coefficient_map(law, &gamma, gens, budget)?;
    Ok(Transformation {
        label: format!("steenrod-p{}", config.p),
        source: law.clone(),
        target: law.clone(),
        repr: Repr::Multiplicative { gamma, phi },
        budget: budget.clone(),
    })
}

/// The `p`-th power operation, `α ↦ α^p`.
pub fn power_op(law: &Arc<FormalGroupLaw>, p: u32, budget: &TruncationBudget) -> Transformation {
    Transformation::power(law, p, budget)
}

/// The formal multiplier `[p] = (p·_F t)/t`, a series in `t` with constant
/// term `p`.
pub fn formal_p(law: &FormalGroupLaw, p: i64, budget: &TruncationBudget) -> Result<SparsePoly, SymopError> {
    let t = SparsePoly::variable(&law.ring, law.t);
    let series = law.n_series(p, &t, budget)?;
    Ok(series.div_monomial_exact(&Monomial::from_pairs([(law.t, 1)])?)?)
}

/// Divide a series supported in nonpositive `t`-degrees by the formal
/// multiplier, solving `nonpositive_part(pf·Φ) = N` by back-substitution
/// from the lowest exponent upward.  Every step divides by the constant
/// term of `pf` through [`SparsePoly::exact_divide_integer`], so the
/// quotient never acquires a denominator prime that was not already
/// inverted.  Returns the quotient and the number of nontrivial division
/// steps; fails with the offending exponent when a step is not integral.
pub fn divide_by_formal_p(
    n: &LaurentSeries,
    pf: &SparsePoly,
    budget: &TruncationBudget,
) -> Result<(LaurentSeries, usize), SymopError> {
    let t = n.parameter();
    if n.max_exponent().is_some_and(|e| e > 0) {
        return Err(SymopError::BadConfig {
            detail: String::from("dividend has positive exponents; take the nonpositive part first"),
        });
    }
    let constant = pf.constant_term();
    if constant.is_zero() || !constant.is_integer() {
        return Err(SymopError::BadConfig {
            detail: format!("formal multiplier has constant term {constant}, expected a nonzero integer"),
        });
    }
    let p_int = constant.to_integer();
    let tail: Vec<(i64, SparsePoly)> = pf
        .univariate_in(t)
        .into_iter()
        .filter(|(e, _)| *e > 0)
        .map(|(e, c)| (e as i64, c))
        .collect();

    let ring = pf.ring().clone();
    let mut quotient: BTreeMap<i64, SparsePoly> = BTreeMap::new();
    let mut divisions = 0usize;
    let lo = match n.min_exponent() {
        Some(lo) => lo,
        None => return Ok((LaurentSeries::from_poly(&SparsePoly::zero(&ring), t), 0)),
    };
    for e in lo..=0 {
        let mut rhs = n.coeff(e);
        for (s, c) in &tail {
            if let Some(prev) = quotient.get(&(e - s)) {
                rhs = rhs.sub(&c.mul(prev, budget)?)?;
            }
        }
        if rhs.is_zero() {
            continue;
        }
        let value = rhs.exact_divide_integer(&p_int).map_err(|err| SymopError::Division {
            exponent: e,
            detail: err.to_string(),
        })?;
        divisions += 1;
        quotient.insert(e, value);
    }

    let mut poly = SparsePoly::zero(&ring);
    for (e, c) in &quotient {
        let tm = SparsePoly::term(&ring, Monomial::var(t).pow(*e as i32)?, BigRational::one());
        poly = poly.add(&tm.mul(c, budget)?)?;
    }
    Ok((LaurentSeries::from_poly(&poly, t), divisions))
}

/// Value of `Φ(ī)` on one input, with its defining residual.
#[derive(Debug, Clone)]
pub struct PhiResult {
    /// The quotient, supported in nonpositive `t`-degrees.
    pub phi: LaurentSeries,
    /// `□^p(input) − St(input) − [p]·Φ`; supported in positive degrees.
    pub residual: LaurentSeries,
    /// Number of nontrivial exact divisions performed.
    pub divisions: usize,
}

impl PhiResult {
    /// Whether the residual is supported in strictly positive degrees.
    pub fn residual_positive(&self) -> bool {
        self.residual.min_exponent().is_none_or(|e| e >= 1)
    }
}

/// Depth profile of an input under the coefficient twist: the largest
/// weight `Σ (index+1)·exponent` any one monomial carries over the
/// exponential generators, and the deepest generator index present.
/// Rejects coefficient generators the twist has no image for.
fn twist_profile(law: &FormalGroupLaw, input: &SparsePoly) -> Result<(i64, i64), SymopError> {
    let ring = input.ring().clone();
    let mut weight = 0i64;
    let mut deepest = 0i64;
    for (m, _) in input.sorted_terms() {
        let mut w = 0i64;
        for (id, e) in m.iter() {
            let g = ring.info(id);
            if g.kind == SymbolKind::Coefficient && g.degree < 0 && e > 0 {
                let k = -g.degree;
                if law.ring.id(&format!("b{k}")) != Some(id) || k + 1 > law.cap {
                    return Err(SymopError::BadConfig {
                        detail: format!(
                            "coefficient generator {} has no image under the total operation at cap {}",
                            ring.name(id),
                            law.cap
                        ),
                    });
                }
                w += (k + 1) * i64::from(e);
                deepest = deepest.max(k);
            }
        }
        weight = weight.max(w);
    }
    Ok((weight, deepest))
}

/// Everything [`symmetric_phi`] computes, at working precision, for reuse
/// by the verifier.
struct PhiComputation {
    difference: LaurentSeries,
    multiplier: SparsePoly,
    phi: LaurentSeries,
    residual: LaurentSeries,
    divisions: usize,
    work: TruncationBudget,
}

fn phi_core(
    config: &SteenrodConfig,
    law: &Arc<FormalGroupLaw>,
    input: &SparsePoly,
    budget: &TruncationBudget,
) -> Result<PhiComputation, SymopError> {
    let user_floor = match budget.laurent_floor {
        Some((s, f)) if s == law.t => f,
        _ => 0,
    };
    let (weight, deepest) = twist_profile(law, input)?;
    let depth = (config.p - 1) * (weight + 1);
    let floor = user_floor.max(depth);
    // Positive-side slack: the twisted image of the deepest generator is
    // only reliable (p−1)+1 degrees per index below the working cap, and
    // its upper tail pairs with the floors of the other factors.
    let slack = if deepest == 0 { 0 } else { (deepest + 2 - config.p).max(0) };
    let work = TruncationBudget {
        series_cap: budget.series_cap + floor + slack,
        coefficient_cap: budget.coefficient_cap,
        laurent_floor: Some((law.t, floor)),
    };
    if law.cap < work.series_cap {
        return Err(SymopError::BadConfig {
            detail: format!(
                "law cap {} is below the working cap {}; rebuild the law with cap at least {}",
                law.cap, work.series_cap, work.series_cap
            ),
        });
    }

    let gens: Vec<_> = exponential_gens(law).into_iter().take(deepest as usize).collect();
    let st = steenrod_with_gens(config, law, &gens, &work)?;
    let st_value = st.eval(input, &work)?;
    let powered = input.pow(config.p as u32, &work)?;
    let difference = LaurentSeries::from_poly(&powered.sub(&st_value)?, law.t);

    let multiplier = formal_p(law, config.p, &work)?;
    let (phi, divisions) = divide_by_formal_p(&difference.nonpositive_part(), &multiplier, &work)?;
    let residual = difference.sub(&phi.mul_poly(&multiplier, &work)?)?;
    if residual.min_exponent().is_some_and(|e| e <= 0) {
        return Err(SymopError::Division {
            exponent: residual.min_exponent().unwrap_or(0),
            detail: String::from("residual kept a nonpositive term after division"),
        });
    }
    Ok(PhiComputation { difference, multiplier, phi, residual, divisions, work })
}

/// Compute `Φ(ī)` on one input: take `□^p − St(ī)`, divide the
/// nonpositive part by the formal multiplier, and return the quotient with
/// the (strictly positive) residual.  The reported series are truncated to
/// the requested cap; the division itself runs at a working precision deep
/// enough for every twisted coefficient the input can reach.
pub fn symmetric_phi(
    config: &SteenrodConfig,
    law: &Arc<FormalGroupLaw>,
    input: &SparsePoly,
    budget: &TruncationBudget,
) -> Result<PhiResult, SymopError> {
    let core = phi_core(config, law, input, budget)?;
    let report = TruncationBudget {
        series_cap: budget.series_cap,
        coefficient_cap: budget.coefficient_cap,
        laurent_floor: core.work.laurent_floor,
    };
    Ok(PhiResult {
        phi: core.phi.truncate(&report)?,
        residual: core.residual.truncate(&report)?,
        divisions: core.divisions,
    })
}

/// One verified input of [`verify_phi`].
#[derive(Debug, Clone)]
pub struct PhiCheck {
    pub input: String,
    /// The exact division ran to completion.
    pub division_ok: bool,
    /// The residual is supported in strictly positive degrees.
    pub residual_ok: bool,
    /// Perturbing the quotient breaks the defining property.
    pub uniqueness_ok: bool,
    pub witness: Option<String>,
}

impl PhiCheck {
    pub fn passed(&self) -> bool {
        self.division_ok && self.residual_ok && self.uniqueness_ok
    }
}

/// Outcome of [`verify_phi`] over a list of inputs.
#[derive(Debug, Clone)]
pub struct PhiReport {
    pub checks: Vec<PhiCheck>,
}

impl PhiReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(PhiCheck::passed)
    }
}

/// For each input: run the division, confirm the residual is positive, and
/// probe uniqueness by shifting the quotient at its lowest exponent and at
/// zero — each perturbation must surface in the nonpositive part of the
/// perturbed residual.  Division failures are recorded per input, not
/// raised.
pub fn verify_phi(
    config: &SteenrodConfig,
    law: &Arc<FormalGroupLaw>,
    inputs: &[SparsePoly],
    budget: &TruncationBudget,
) -> Result<PhiReport, SymopError> {
    let mut checks = Vec::with_capacity(inputs.len());
    for input in inputs {
        let label = input.to_string();
        let core = match phi_core(config, law, input, budget) {
            Ok(core) => core,
            Err(SymopError::Division { exponent, detail }) => {
                checks.push(PhiCheck {
                    input: label,
                    division_ok: false,
                    residual_ok: false,
                    uniqueness_ok: false,
                    witness: Some(format!("division failed at t^{exponent}: {detail}")),
                });
                continue;
            }
            Err(e) => return Err(e),
        };

        let residual_ok = core.residual.min_exponent().is_none_or(|e| e >= 1);
        let mut uniqueness_ok = true;
        let mut witness = None;
        let probes = {
            let mut p = alloc::vec![0i64];
            if let Some(lo) = core.phi.min_exponent() {
                if lo < 0 {
                    p.push(lo);
                }
            }
            p
        };
        for probe in probes {
            let ring = core.multiplier.ring().clone();
            let bump = SparsePoly::term(&ring, Monomial::var(law.t).pow(probe as i32)?, BigRational::one());
            let shifted = core.phi.add(&LaurentSeries::from_poly(&bump, law.t))?;
            let perturbed = core
                .difference
                .sub(&shifted.mul_poly(&core.multiplier, &core.work)?)?
                .nonpositive_part();
            if perturbed.min_exponent().is_none() {
                uniqueness_ok = false;
                witness = Some(format!("perturbation at t^{probe} left the residual positive"));
                break;
            }
        }

        checks.push(PhiCheck {
            input: label,
            division_ok: true,
            residual_ok,
            uniqueness_ok,
            witness,
        });
    }
    Ok(PhiReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fgl::{make_additive, make_multiplicative, make_universal};
    use crate::ring::{GeneratorSet, SymbolId};
    use alloc::vec;
    use num_bigint::BigInt;

    fn big(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn floored(cap: i64, law: &FormalGroupLaw, k: i64) -> TruncationBudget {
        TruncationBudget {
            series_cap: cap,
            coefficient_cap: None,
            laurent_floor: Some((law.t, k)),
        }
    }

    /// Law ring extended with two series variables for inputs.
    fn with_vars(law: FormalGroupLaw) -> (Arc<FormalGroupLaw>, Arc<GeneratorSet>, SymbolId, SymbolId) {
        let mut g = GeneratorSet::extend(&law.ring);
        let z1 = g.series("z1");
        let z2 = g.series("z2");
        (Arc::new(law), g.freeze(), z1, z2)
    }

    fn law_coeff(law: &FormalGroupLaw, i: i32, j: i32) -> SparsePoly {
        law.f.coefficient_of_power(law.x, i).coefficient_of_power(law.y, j)
    }

    #[test]
    fn config_demands_one_representative_per_class() {
        assert!(SteenrodConfig::new(2).is_ok());
        assert!(SteenrodConfig::new(3).is_ok());
        assert_eq!(SteenrodConfig::new(3).unwrap().reps, vec![1, 2]);
        assert_eq!(SteenrodConfig::new(5).unwrap().rep_product(), 24);
        assert!(SteenrodConfig::with_reps(2, vec![-1]).is_ok());
        assert!(matches!(SteenrodConfig::new(4), Err(SymopError::BadConfig { .. })));
        assert!(matches!(SteenrodConfig::with_reps(2, vec![2]), Err(SymopError::BadConfig { .. })));
        assert!(matches!(SteenrodConfig::with_reps(3, vec![1, 4]), Err(SymopError::BadConfig { .. })));
        assert!(matches!(SteenrodConfig::with_reps(3, vec![1]), Err(SymopError::BadConfig { .. })));
    }

    #[test]
    fn gamma_is_a_plain_product_for_the_additive_law() {
        let law = make_additive(8);
        let budget = TruncationBudget::series(6);
        let x = SparsePoly::variable(&law.ring, law.x);
        let t = SparsePoly::variable(&law.ring, law.t);

        let cfg = SteenrodConfig::new(2).unwrap();
        let got = gamma_st(&cfg, &law, &budget).unwrap();
        let expected = x.mul(&x.add(&t).unwrap(), &budget).unwrap();
        assert_eq!(got, expected);

        let cfg = SteenrodConfig::new(3).unwrap();
        let got = gamma_st(&cfg, &law, &budget).unwrap();
        let expected = x
            .mul(&x.add(&t).unwrap(), &budget)
            .unwrap()
            .mul(&x.add(&t.scalar_mul(&big(2))).unwrap(), &budget)
            .unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn gamma_leading_coefficients_over_the_universal_law() {
        let law = make_universal(6, 6);
        let budget = TruncationBudget::series(5);
        let cfg = SteenrodConfig::new(2).unwrap();
        let gamma = gamma_st(&cfg, &law, &budget).unwrap();
        let t = SparsePoly::variable(&law.ring, law.t);
        assert_eq!(gamma.coefficient_of_power(law.x, 1), t);
        // [x²]γ = 1 + Σ_j a_{1j} t^j, the x-linear slice of the law; the
        // cap-5 budget keeps this slice through t³.
        let mut expected = SparsePoly::one(&law.ring);
        for j in 1..=3 {
            let tj = t.pow(j as u32, &budget).unwrap();
            expected = expected.add(&law_coeff(&law, 1, j).mul(&tj, &budget).unwrap()).unwrap();
        }
        assert_eq!(gamma.coefficient_of_power(law.x, 2), expected);
    }

    #[test]
    fn total_operation_on_a_variable_is_gamma() {
        let (law, ring, z1, _) = with_vars(make_additive(8));
        let budget = floored(6, &law, 2);
        let cfg = SteenrodConfig::new(2).unwrap();
        let st = steenrod_total(&cfg, &law, &budget).unwrap();
        let z = SparsePoly::variable(&ring, z1);
        let got = st.eval(&z, &budget).unwrap();
        let t = SparsePoly::variable(&ring, law.t);
        let expected = z.mul(&z.add(&t).unwrap(), &budget).unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn total_operation_is_multiplicative() {
        let (law, ring, z1, z2) = with_vars(make_universal(6, 6));
        let budget = floored(4, &law, 4);
        let cfg = SteenrodConfig::new(2).unwrap();
        let st = steenrod_total(&cfg, &law, &budget).unwrap();
        let a = SparsePoly::variable(&ring, z1);
        let b = SparsePoly::variable(&ring, z2);
        let product = st.eval(&a.mul(&b, &budget).unwrap(), &budget).unwrap();
        let split = st
            .eval(&a, &budget)
            .unwrap()
            .mul(&st.eval(&b, &budget).unwrap(), &budget)
            .unwrap();
        assert_eq!(product, split);
    }

    #[test]
    fn twisted_first_coefficient_matches_the_hand_series() {
        let law = Arc::new(make_universal(6, 6));
        let budget = floored(5, &law, 6);
        let cfg = SteenrodConfig::new(2).unwrap();
        let st = steenrod_total(&cfg, &law, &budget).unwrap();
        let phi = match &st.repr {
            Repr::Multiplicative { phi, .. } => phi.clone(),
            other => panic!("unexpected representation {other:?}"),
        };
        let b1 = law.ring.id("b1").unwrap();
        let image = LaurentSeries::from_poly(&phi[&b1], law.t);
        // By direct expansion: t⁻² + (b₁ + a₁₁)t⁻¹ + a₁₂ + a₁₃t + …
        let one = SparsePoly::one(&law.ring);
        let b1p = SparsePoly::variable(&law.ring, b1);
        assert_eq!(image.coeff(-2), one);
        assert_eq!(image.coeff(-1), b1p.scalar_mul(&big(3)));
        assert_eq!(image.coeff(0), law_coeff(&law, 1, 2));
        assert_eq!(image.coeff(1), law_coeff(&law, 1, 3));
    }

    #[test]
    fn twisted_coefficients_respect_the_exponential_equation() {
        // The twist is the classifying map of the γ-conjugated law: its
        // exponential is ẽ = γ∘e∘(c₀⁻¹·), so substituting the twisted
        // coefficients into F must satisfy F_φ(ẽ(a), ẽ(b)) = ẽ(a+b).
        let law = Arc::new(make_universal(5, 5));
        let budget = floored(5, &law, 6);
        let cfg = SteenrodConfig::new(2).unwrap();
        let st = steenrod_total(&cfg, &law, &budget).unwrap();
        let (gamma, phi) = match &st.repr {
            Repr::Multiplicative { gamma, phi } => (gamma.clone(), phi.clone()),
            other => panic!("unexpected representation {other:?}"),
        };

        let mut g = GeneratorSet::extend(&law.ring);
        let av = g.series("av");
        let bv = g.series("bv");
        let ring = g.freeze();
        let t_inv = SparsePoly::term(&ring, Monomial::var(law.t).pow(-1).unwrap(), BigRational::one());

        // ẽ(u) = γ(e(t⁻¹·u)); for p = 2 the linear coefficient c₀ is t.
        let ebar = |u: SymbolId| -> SparsePoly {
            let scaled = t_inv.mul(&SparsePoly::variable(&ring, u), &budget).unwrap();
            let e_at = law.exp.substitute(&[(law.x, scaled)], &budget).unwrap();
            gamma.substitute(&[(law.x, e_at)], &budget).unwrap()
        };
        let ea = ebar(av);
        let eb = ebar(bv);

        let assignments: Vec<(SymbolId, SparsePoly)> = phi
            .iter()
            .map(|(b, img)| (*b, img.clone()))
            .chain([(law.x, ea.clone()), (law.y, eb.clone())])
            .collect();
        let lhs = law.f.substitute(&assignments, &budget).unwrap();

        let sum = SparsePoly::variable(&ring, av).add(&SparsePoly::variable(&ring, bv)).unwrap();
        let scaled = t_inv.mul(&sum, &budget).unwrap();
        let e_at = law.exp.substitute(&[(law.x, scaled)], &budget).unwrap();
        let rhs = gamma.substitute(&[(law.x, e_at)], &budget).unwrap();

        for (i, j) in [(1, 1), (1, 2), (2, 1)] {
            let l = lhs.coefficient_of_power(av, i).coefficient_of_power(bv, j);
            let r = rhs.coefficient_of_power(av, i).coefficient_of_power(bv, j);
            assert_eq!(l, r, "mismatch at a^{i} b^{j}");
        }
    }

    #[test]
    fn formal_multiplier_examples() {
        let budget = TruncationBudget::series(5);
        let additive = make_additive(8);
        assert_eq!(
            formal_p(&additive, 3, &budget).unwrap(),
            SparsePoly::constant(&additive.ring, big(3))
        );

        let mult = make_multiplicative(8);
        let beta = SparsePoly::variable(&mult.ring, mult.ring.id("beta").unwrap());
        let t = SparsePoly::variable(&mult.ring, mult.t);
        let expected = SparsePoly::constant(&mult.ring, big(2))
            .sub(&beta.mul(&t, &budget).unwrap())
            .unwrap();
        assert_eq!(formal_p(&mult, 2, &budget).unwrap(), expected);

        let universal = make_universal(6, 6);
        let pf = formal_p(&universal, 2, &budget).unwrap();
        let b1 = SparsePoly::variable(&universal.ring, universal.ring.id("b1").unwrap());
        assert_eq!(pf.coefficient_of_power(universal.t, 0), SparsePoly::constant(&universal.ring, big(2)));
        assert_eq!(pf.coefficient_of_power(universal.t, 1), b1.scalar_mul(&big(2)));
    }

    #[test]
    fn division_by_a_constant_multiplier() {
        let law = make_additive(8);
        let budget = floored(5, &law, 4);
        let t_inv = SparsePoly::term(&law.ring, Monomial::var(law.t).pow(-1).unwrap(), BigRational::one());
        let n_poly = SparsePoly::constant(&law.ring, big(4)).add(&t_inv.scalar_mul(&big(2))).unwrap();
        let n = LaurentSeries::from_poly(&n_poly, law.t);
        let pf = SparsePoly::constant(&law.ring, big(2));
        let (phi, divisions) = divide_by_formal_p(&n, &pf, &budget).unwrap();
        assert_eq!(divisions, 2);
        assert_eq!(phi.coeff(-1), SparsePoly::one(&law.ring));
        assert_eq!(phi.coeff(0), SparsePoly::constant(&law.ring, big(2)));

        let zero = LaurentSeries::from_poly(&SparsePoly::zero(&law.ring), law.t);
        let (phi, divisions) = divide_by_formal_p(&zero, &pf, &budget).unwrap();
        assert_eq!(divisions, 0);
        assert!(phi.min_exponent().is_none());
    }

    #[test]
    fn division_round_trips_through_the_multiplier() {
        let (law, ring, z1, _) = with_vars(make_universal(6, 6));
        let budget = floored(5, &law, 4);
        let pf = formal_p(&law, 2, &budget).unwrap();
        let b1 = SparsePoly::variable(&ring, ring.id("b1").unwrap());
        let z = SparsePoly::variable(&ring, z1);
        let t_m2 = SparsePoly::term(&ring, Monomial::var(law.t).pow(-2).unwrap(), BigRational::one());
        let t_m1 = SparsePoly::term(&ring, Monomial::var(law.t).pow(-1).unwrap(), BigRational::one());
        let phi0_poly = t_m2
            .mul(&z, &budget)
            .unwrap()
            .add(&t_m1.mul(&b1, &budget).unwrap())
            .unwrap()
            .add(&SparsePoly::constant(&ring, big(3)))
            .unwrap();
        let phi0 = LaurentSeries::from_poly(&phi0_poly, law.t);
        let n = phi0.mul_poly(&pf, &budget).unwrap().nonpositive_part();
        let (recovered, _) = divide_by_formal_p(&n, &pf, &budget).unwrap();
        assert_eq!(recovered.to_poly(), phi0.to_poly());
    }

    #[test]
    fn division_failure_names_the_exponent() {
        let law = make_additive(8);
        let budget = floored(5, &law, 4);
        let mut g = GeneratorSet::extend(&law.ring);
        let z1 = g.series("z1");
        let ring = g.freeze();
        let t_inv = SparsePoly::term(&ring, Monomial::var(law.t).pow(-1).unwrap(), BigRational::one());
        let n_poly = t_inv.mul(&SparsePoly::variable(&ring, z1), &budget).unwrap();
        let n = LaurentSeries::from_poly(&n_poly, law.t);
        let pf = SparsePoly::constant(&ring, big(2));
        match divide_by_formal_p(&n, &pf, &budget) {
            Err(SymopError::Division { exponent, .. }) => assert_eq!(exponent, -1),
            other => panic!("expected a division failure, got {other:?}"),
        }
    }

    #[test]
    fn plain_variables_have_no_symmetric_part() {
        // γ(z) has only positive powers of t, so □^p − St is positive and
        // Φ vanishes — over every law, for both small primes.
        let (law, ring, z1, z2) = with_vars(make_universal(8, 8));
        let budget = TruncationBudget::series(4);
        let z = SparsePoly::variable(&ring, z1);
        let w = SparsePoly::variable(&ring, z2);
        let inputs = [
            z.clone(),
            z.mul(&z, &budget).unwrap(),
            z.mul(&w, &budget).unwrap(),
        ];
        for p in [2i64, 3] {
            let cfg = SteenrodConfig::new(p).unwrap();
            for input in &inputs {
                let r = symmetric_phi(&cfg, &law, input, &budget).unwrap();
                assert!(r.phi.min_exponent().is_none(), "Φ ≠ 0 for p={p} on {input}");
                assert_eq!(r.divisions, 0);
                assert!(r.residual_positive());
            }
        }
    }

    #[test]
    fn additive_specialization_keeps_the_difference_positive() {
        let (law, ring, z1, z2) = with_vars(make_additive(8));
        let budget = TruncationBudget::series(4);
        let z = SparsePoly::variable(&ring, z1);
        let w = SparsePoly::variable(&ring, z2);
        for p in [2i64, 3] {
            let cfg = SteenrodConfig::new(p).unwrap();
            for input in [z.clone(), z.mul(&w, &budget).unwrap()] {
                let r = symmetric_phi(&cfg, &law, &input, &budget).unwrap();
                assert!(r.phi.min_exponent().is_none());
                assert!(r.residual_positive());
            }
        }
    }

    #[test]
    fn phi_on_a_degree_one_class_matches_the_hand_computation() {
        // Input a₁₁·z₁ = 2b₁·z₁.  Expanding □² − St by hand:
        //   φ₋₂ = −z₁²
        //   φ₋₁ = −z₁ − 4b₁z₁² − a₂₁z₁³ − a₃₁z₁⁴ − a₄₁z₁⁵
        //   φ₀ |_{z₁²} = −a₁₂
        // (z₁⁵·t⁻¹ sits exactly at the reporting cap, so the a₄₁ term is
        // the last one kept.)
        let (law, ring, z1, _) = with_vars(make_universal(8, 8));
        let budget = TruncationBudget::series(4);
        let cfg = SteenrodConfig::new(2).unwrap();
        let z = SparsePoly::variable(&ring, z1);
        let b1 = SparsePoly::variable(&ring, ring.id("b1").unwrap());
        let input = b1.mul(&z, &budget).unwrap().scalar_mul(&big(2));
        let r = symmetric_phi(&cfg, &law, &input, &budget).unwrap();

        let z2 = z.mul(&z, &budget).unwrap();
        assert_eq!(r.phi.coeff(-2), z2.neg());

        let a21 = law_coeff(&law, 2, 1);
        let a31 = law_coeff(&law, 3, 1);
        let a41 = law_coeff(&law, 4, 1);
        let wide = TruncationBudget::series(8);
        let z3 = z2.mul(&z, &wide).unwrap();
        let z4 = z3.mul(&z, &wide).unwrap();
        let z5 = z4.mul(&z, &wide).unwrap();
        let expected = z
            .add(&b1.mul(&z2, &wide).unwrap().scalar_mul(&big(4)))
            .unwrap()
            .add(&a21.mul(&z3, &wide).unwrap())
            .unwrap()
            .add(&a31.mul(&z4, &wide).unwrap())
            .unwrap()
            .add(&a41.mul(&z5, &wide).unwrap())
            .unwrap()
            .neg();
        assert_eq!(r.phi.coeff(-1), expected);

        let a12 = law_coeff(&law, 1, 2);
        assert_eq!(r.phi.coeff(0).coefficient_of_power(z1, 2), a12.neg());
        assert!(r.residual_positive());
        assert!(r.divisions >= 3);
    }

    #[test]
    fn phi_division_succeeds_at_the_odd_prime() {
        let (law, ring, z1, _) = with_vars(make_universal(9, 9));
        let budget = TruncationBudget::series(3);
        let cfg = SteenrodConfig::new(3).unwrap();
        let z = SparsePoly::variable(&ring, z1);
        let b1 = SparsePoly::variable(&ring, ring.id("b1").unwrap());
        let input = b1.mul(&z, &budget).unwrap().scalar_mul(&big(2));
        let r = symmetric_phi(&cfg, &law, &input, &budget).unwrap();
        assert!(r.residual_positive());
        assert!(r.divisions >= 1, "expected a nontrivial quotient at p = 3");
    }

    #[test]
    fn representative_choice_preserves_division_success() {
        let (law, ring, z1, _) = with_vars(make_universal(8, 8));
        let budget = TruncationBudget::series(4);
        let z = SparsePoly::variable(&ring, z1);
        let b1 = SparsePoly::variable(&ring, ring.id("b1").unwrap());
        let input = b1.mul(&z, &budget).unwrap().scalar_mul(&big(2));
        for cfg in [SteenrodConfig::new(2).unwrap(), SteenrodConfig::with_reps(2, vec![-1]).unwrap()] {
            let r = symmetric_phi(&cfg, &law, &input, &budget).unwrap();
            assert!(r.residual_positive(), "reps {:?}", cfg.reps);
            assert!(r.divisions >= 3, "reps {:?}", cfg.reps);
        }
    }

    #[test]
    fn corrupted_multiplier_is_detected() {
        let (law, ring, z1, _) = with_vars(make_universal(7, 7));
        let budget = floored(4, &law, 3);
        let work = TruncationBudget {
            series_cap: 7,
            coefficient_cap: None,
            laurent_floor: Some((law.t, 3)),
        };
        let cfg = SteenrodConfig::new(2).unwrap();
        let z = SparsePoly::variable(&ring, z1);
        let b1 = SparsePoly::variable(&ring, ring.id("b1").unwrap());
        let input = b1.mul(&z, &work).unwrap().scalar_mul(&big(2));

        let st = steenrod_total(&cfg, &law, &work).unwrap();
        let st_value = st.eval(&input, &work).unwrap();
        let powered = input.pow(2, &work).unwrap();
        let difference = LaurentSeries::from_poly(&powered.sub(&st_value).unwrap(), law.t);

        let t = SparsePoly::variable(&ring, law.t);
        let corrupted = formal_p(&law, 2, &work).unwrap().add(&t).unwrap();
        match divide_by_formal_p(&difference.nonpositive_part(), &corrupted, &work) {
            Err(SymopError::Division { exponent, .. }) => assert_eq!(exponent, -1),
            other => panic!("corrupted multiplier went undetected: {other:?}"),
        }
        let _ = budget;
    }

    #[test]
    fn verifier_passes_the_standard_inputs() {
        let (law, ring, z1, z2) = with_vars(make_universal(8, 8));
        let budget = TruncationBudget::series(4);
        let cfg = SteenrodConfig::new(2).unwrap();
        let z = SparsePoly::variable(&ring, z1);
        let w = SparsePoly::variable(&ring, z2);
        let b1 = SparsePoly::variable(&ring, ring.id("b1").unwrap());
        let inputs = [
            z.clone(),
            z.mul(&z, &budget).unwrap(),
            z.mul(&w, &budget).unwrap(),
            b1.mul(&z, &budget).unwrap().scalar_mul(&big(2)),
        ];
        let report = verify_phi(&cfg, &law, &inputs, &budget).unwrap();
        assert!(report.all_passed(), "report: {:?}", report.checks);

        let cfg = SteenrodConfig::new(3).unwrap();
        let report = verify_phi(&cfg, &law, &[z.clone()], &budget).unwrap();
        assert!(report.all_passed(), "p = 3 report: {:?}", report.checks);
    }

    #[test]
    fn verifier_reports_failures_without_raising() {
        // b₁·z₁ is outside the subring generated by the law coefficients;
        // at p = 2 its division stops at t⁻² with an odd numerator.
        let (law, ring, z1, _) = with_vars(make_universal(8, 8));
        let budget = TruncationBudget::series(4);
        let cfg = SteenrodConfig::new(2).unwrap();
        let z = SparsePoly::variable(&ring, z1);
        let b1 = SparsePoly::variable(&ring, ring.id("b1").unwrap());
        let input = b1.mul(&z, &budget).unwrap();
        let report = verify_phi(&cfg, &law, &[input], &budget).unwrap();
        assert_eq!(report.checks.len(), 1);
        assert!(!report.checks[0].division_ok);
        assert!(report.checks[0].witness.as_deref().unwrap_or("").contains("t^-2"));
    }
}
