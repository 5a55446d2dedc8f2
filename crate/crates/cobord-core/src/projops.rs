//! Filtered transformations between power-series contexts attached to
//! formal group laws.
//!
//! A [`Transformation`] sends series over a source law `A` to series over a
//! target law `B`, respecting the filtration by series valuation.  The
//! structured representations — identity, `p`-th power, and the
//! multiplicative form `(γ, φ)` that replaces each series variable `v` by
//! `γ(v)` and twists coefficients through `φ` — determine an operation
//! completely; a black-box closure is the escape hatch for everything else.
//!
//! The checker [`check_axioms`] verifies the four interchange laws on a
//! sample library: variable transpositions, setting a variable to zero,
//! the formal sum (pre-substituted with `+_A`, post-substituted with
//! `+_B`), and injective relabelling.  Discrete derivatives of an operation
//! become genuine multi-slot operations through [`derived_poly`], and
//! [`pushforward_rhs`] evaluates the residue expression that drives
//! divisor push-forwards:
//! `Res_t G(∏ xᵢ·α)|_{xᵢ = t +_B μᵢ} · ω(t) / (∏(t +_B μᵢ)·t)`.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand_core::SeedableRng;

use crate::fgl::{generalized_reversion, FglError, FormalGroupLaw, LaurentSeries};
use crate::ring::{GeneratorSet, Monomial, RingError, SparsePoly, SymbolId, TruncationBudget};
use crate::taylor::{self, MapBox, TaylorError};

/// Errors from transformation evaluation and checking.
#[derive(Debug, Clone)]
pub enum OpsError {
    Ring(RingError),
    Fgl(FglError),
    Taylor(TaylorError),
    /// A multi-slot map was handed the wrong number of arguments.
    ArityMismatch { expected: usize, got: usize },
    /// A precondition on filtration (e.g. `G(0) = 0`) is violated.
    NotFiltered { detail: String },
    /// The representation cannot evaluate this input.
    Unsupported { detail: String },
}

impl From<RingError> for OpsError {
    fn from(e: RingError) -> Self {
        OpsError::Ring(e)
    }
}

impl From<FglError> for OpsError {
    fn from(e: FglError) -> Self {
        OpsError::Fgl(e)
    }
}

impl From<TaylorError> for OpsError {
    fn from(e: TaylorError) -> Self {
        OpsError::Taylor(e)
    }
}

impl core::fmt::Display for OpsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            OpsError::Ring(e) => write!(f, "{e}"),
            OpsError::Fgl(e) => write!(f, "{e}"),
            OpsError::Taylor(e) => write!(f, "{e}"),
            OpsError::ArityMismatch { expected, got } => {
                write!(f, "expected {expected} arguments, got {got}")
            }
            OpsError::NotFiltered { detail } => write!(f, "not filtered: {detail}"),
            OpsError::Unsupported { detail } => write!(f, "unsupported: {detail}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for OpsError {}

type BlackBoxFn = dyn Fn(&SparsePoly, &TruncationBudget) -> Result<SparsePoly, OpsError> + Send + Sync;

/// Structured representation of a transformation.
#[derive(Clone)]
pub enum Repr {
    /// Coefficients embedded, variables relabelled in place.
    Identity,
    /// `α ↦ α^p` with coefficients embedded.
    Power(u32),
    /// Replace every series variable `v` by `γ(v)`, apply `φ` to mapped
    /// coefficient generators, and multiply.  `γ` is a series in the target
    /// law's `x` with `γ(x) = x·(unit)`; the target law's residue parameter
    /// `t` passes through untouched (it lives in the coefficient world).
    Multiplicative { gamma: SparsePoly, phi: BTreeMap<SymbolId, SparsePoly> },
    /// Scalar multiple of another representation.
    Scaled(BigRational, Box<Repr>),
    /// Pointwise sum of representations.
    Sum(Vec<Repr>),
    /// Arbitrary evaluation contract.
    BlackBox(Arc<BlackBoxFn>),
}

impl core::fmt::Debug for Repr {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Repr::Identity => write!(f, "Identity"),
            Repr::Power(p) => write!(f, "Power({p})"),
            Repr::Multiplicative { gamma, .. } => write!(f, "Multiplicative(γ = {gamma})"),
            Repr::Scaled(c, inner) => write!(f, "Scaled({c}, {inner:?})"),
            Repr::Sum(parts) => write!(f, "Sum({parts:?})"),
            Repr::BlackBox(_) => write!(f, "BlackBox"),
        }
    }
}

/// A filtered map from series over the source law to series over the
/// target law.
#[derive(Debug, Clone)]
pub struct Transformation {
    pub label: String,
    pub source: Arc<FormalGroupLaw>,
    pub target: Arc<FormalGroupLaw>,
    pub repr: Repr,
    /// Default working budget for evaluation and checking.
    pub budget: TruncationBudget,
}

impl Transformation {
    pub fn identity(law: &Arc<FormalGroupLaw>, budget: &TruncationBudget) -> Self {
        Transformation {
            label: String::from("identity"),
            source: law.clone(),
            target: law.clone(),
            repr: Repr::Identity,
            budget: budget.clone(),
        }
    }

    pub fn power(law: &Arc<FormalGroupLaw>, p: u32, budget: &TruncationBudget) -> Self {
        Transformation {
            label: format!("power-{p}"),
            source: law.clone(),
            target: law.clone(),
            repr: Repr::Power(p),
            budget: budget.clone(),
        }
    }

    /// Evaluate on a series, truncating to `budget`.
    pub fn eval(&self, alpha: &SparsePoly, budget: &TruncationBudget) -> Result<SparsePoly, OpsError> {
        eval_repr(&self.repr, &self.target, alpha, budget)
    }

    /// Evaluate with the image of zero subtracted, so the result always
    /// vanishes on the zero series.
    pub fn eval_normalized(&self, alpha: &SparsePoly, budget: &TruncationBudget) -> Result<SparsePoly, OpsError> {
        let raw = self.eval(alpha, budget)?;
        let at_zero = self.eval(&SparsePoly::zero(alpha.ring()), budget)?;
        Ok(raw.sub(&at_zero)?)
    }
}

fn eval_repr(
    repr: &Repr,
    target: &FormalGroupLaw,
    alpha: &SparsePoly,
    budget: &TruncationBudget,
) -> Result<SparsePoly, OpsError> {
    match repr {
        Repr::Identity => Ok(alpha.truncate(budget)),
        Repr::Power(p) => Ok(alpha.pow(*p, budget)?),
        Repr::Multiplicative { gamma, phi } => eval_multiplicative(gamma, phi, target, alpha, budget),
        Repr::Scaled(c, inner) => Ok(eval_repr(inner, target, alpha, budget)?.scalar_mul(c)),
        Repr::Sum(parts) => {
            let mut acc = SparsePoly::zero(alpha.ring());
            for part in parts {
                acc = acc.add(&eval_repr(part, target, alpha, budget)?)?;
            }
            Ok(acc.truncate(budget))
        }
        Repr::BlackBox(f) => f(alpha, budget),
    }
}

fn eval_multiplicative(
    gamma: &SparsePoly,
    phi: &BTreeMap<SymbolId, SparsePoly>,
    target: &FormalGroupLaw,
    alpha: &SparsePoly,
    budget: &TruncationBudget,
) -> Result<SparsePoly, OpsError> {
    let ring = GeneratorSet::join(alpha.ring(), gamma.ring())?;
    let slot = target.x;
    // γ applied to each series variable, cached per symbol.
    let mut gamma_of: BTreeMap<SymbolId, SparsePoly> = BTreeMap::new();
    let mut out = SparsePoly::zero(&ring);
    for (m, c) in alpha.iter() {
        let (coeff_part, series_part) = m.split_kinds(alpha.ring());
        let mut acc = SparsePoly::constant(&ring, c.clone());
        let mut passthrough: Vec<(SymbolId, i32)> = Vec::new();
        for (sym, e) in coeff_part.iter() {
            match phi.get(&sym) {
                Some(img) => {
                    if e < 0 {
                        return Err(OpsError::Unsupported {
                            detail: format!(
                                "negative exponent on mapped coefficient generator {}",
                                alpha.ring().name(sym)
                            ),
                        });
                    }
                    acc = acc.mul(&img.clone().into_ring(&ring)?.pow(e as u32, budget)?, budget)?;
                }
                None => passthrough.push((sym, e)),
            }
        }
        for (sym, e) in series_part.iter() {
            if sym == target.t {
                passthrough.push((sym, e));
                continue;
            }
            if e < 0 {
                return Err(OpsError::Unsupported {
                    detail: format!("negative exponent on series variable {}", alpha.ring().name(sym)),
                });
            }
            let g_of_v = match gamma_of.get(&sym) {
                Some(v) => v.clone(),
                None => {
                    let v = gamma.substitute(&[(slot, SparsePoly::variable(&ring, sym))], budget)?;
                    gamma_of.insert(sym, v.clone());
                    v
                }
            };
            acc = acc.mul(&g_of_v.pow(e as u32, budget)?, budget)?;
        }
        let kept = SparsePoly::term(&ring, Monomial::from_pairs(passthrough)?, BigRational::one());
        out = out.add(&acc.mul(&kept, budget)?)?;
    }
    Ok(out.truncate(budget))
}

/// Result of one interchange-law check.
#[derive(Debug, Clone)]
pub struct AxiomCheck {
    pub name: String,
    pub passed: bool,
    pub witness: Option<String>,
}

/// Aggregated pass/fail report of the interchange laws.
#[derive(Debug, Clone, Default)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&AxiomCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

impl core::fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        for c in &self.checks {
            writeln!(f, "{}: {}", c.name, if c.passed { "pass" } else { "FAIL" })?;
            if let Some(w) = &c.witness {
                writeln!(f, "  witness: {w}")?;
            }
        }
        Ok(())
    }
}

/// Variable roles for the interchange-law checks.  All symbols must be
/// series variables of the working ring; `fresh` and the second `rename`
/// component must not occur in the samples.  Evaluations run under the
/// transformation's own budget, comparisons under `compare` — when the
/// transformation produces Laurent terms in `t` down to exponent `−K`, the
/// working budget's cap should exceed the comparison cap by at least `K`.
#[derive(Debug, Clone)]
pub struct AxiomContext {
    pub swap: (SymbolId, SymbolId),
    pub kill: SymbolId,
    pub sum_slot: SymbolId,
    pub fresh: (SymbolId, SymbolId),
    pub rename: (SymbolId, SymbolId),
    pub compare: TruncationBudget,
}

fn var(ring: &Arc<GeneratorSet>, s: SymbolId) -> SparsePoly {
    SparsePoly::variable(ring, s)
}

/// Check the four interchange laws of `g` on each sample series, with the
/// image of zero subtracted on both sides.
pub fn check_axioms(
    g: &Transformation,
    ctx: &AxiomContext,
    samples: &[SparsePoly],
) -> Result<AxiomReport, OpsError> {
    let eval = |alpha: &SparsePoly| g.eval_normalized(alpha, &g.budget);
    check_axioms_unary(&eval, &g.source, &g.target, ctx, &ctx.compare, samples)
}

/// [`check_axioms`] with the pre/post substitutions run under a separate
/// `work` budget while the two sides are still compared truncated to
/// `ctx.compare`.  Needed when the transformation maps into a law with
/// Laurent terms: substituting such a law's formal sum under the
/// comparison budget drops terms just below the comparison floor that a
/// positive power of the parameter elsewhere in the series would have
/// lifted back into the window.  `work` should keep everything the window
/// can reach — cap at least the comparison cap plus the working floor, and
/// floor deeper than the comparison floor by the largest parameter power
/// the evaluated samples carry.
pub fn check_axioms_windowed(
    g: &Transformation,
    ctx: &AxiomContext,
    work: &TruncationBudget,
    samples: &[SparsePoly],
) -> Result<AxiomReport, OpsError> {
    let eval = |alpha: &SparsePoly| g.eval_normalized(alpha, &g.budget);
    check_axioms_unary(&eval, &g.source, &g.target, ctx, work, samples)
}

fn check_axioms_unary(
    eval: &dyn Fn(&SparsePoly) -> Result<SparsePoly, OpsError>,
    source: &FormalGroupLaw,
    target: &FormalGroupLaw,
    ctx: &AxiomContext,
    work: &TruncationBudget,
    samples: &[SparsePoly],
) -> Result<AxiomReport, OpsError> {
    let window = &ctx.compare;
    let budget = work;
    let mut report = AxiomReport::default();

    let mut run = |name: &str,
                   pre: &dyn Fn(&SparsePoly) -> Result<SparsePoly, OpsError>,
                   post: &dyn Fn(&SparsePoly) -> Result<SparsePoly, OpsError>|
     -> Result<(), OpsError> {
        let mut passed = true;
        let mut witness = None;
        for (i, alpha) in samples.iter().enumerate() {
            let lhs = eval(&pre(alpha)?)?.truncate(window);
            let rhs = post(&eval(alpha)?)?.truncate(window);
            if lhs != rhs {
                passed = false;
                witness = Some(format!(
                    "sample {i}: α = {alpha}; lhs = {lhs}; rhs = {rhs}; difference = {}",
                    lhs.sub(&rhs)?
                ));
                break;
            }
        }
        report.checks.push(AxiomCheck { name: String::from(name), passed, witness });
        Ok(())
    };

    // (i) symmetry under a variable transposition.
    let (za, zb) = ctx.swap;
    let swap = move |p: &SparsePoly| -> Result<SparsePoly, OpsError> {
        let r = p.ring().clone();
        Ok(p.substitute(&[(za, var(&r, zb)), (zb, var(&r, za))], budget)?)
    };
    run("symmetry", &swap, &swap)?;

    // (ii) setting a variable to zero commutes.
    let kill = ctx.kill;
    let kill_var = move |p: &SparsePoly| -> Result<SparsePoly, OpsError> {
        Ok(p.substitute(&[(kill, SparsePoly::zero(p.ring()))], budget)?)
    };
    run("zero-substitution", &kill_var, &kill_var)?;

    // (iii) the formal sum in fresh variables: source law before, target
    // law after.
    let (u, v) = ctx.fresh;
    let slot = ctx.sum_slot;
    let src = source;
    let tgt = target;
    let pre_sum = move |p: &SparsePoly| -> Result<SparsePoly, OpsError> {
        let r = p.ring().clone();
        let s = src.formal_sum(&var(&r, u), &var(&r, v), budget)?;
        Ok(p.substitute(&[(slot, s)], budget)?)
    };
    let post_sum = move |p: &SparsePoly| -> Result<SparsePoly, OpsError> {
        let r = p.ring().clone();
        let s = tgt.formal_sum(&var(&r, u), &var(&r, v), budget)?;
        Ok(p.substitute(&[(slot, s)], budget)?)
    };
    run("formal-sum", &pre_sum, &post_sum)?;

    // (iv) injective relabelling into an unused variable.
    let (from, to) = ctx.rename;
    let relabel = move |p: &SparsePoly| -> Result<SparsePoly, OpsError> {
        let r = p.ring().clone();
        Ok(p.substitute(&[(from, var(&r, to))], budget)?)
    };
    run("relabelling", &relabel, &relabel)?;

    Ok(report)
}

/// A filtered map with several series slots over per-slot source laws.
/// Blocks record which target-ring variables belong to which slot; they are
/// metadata for the internal/external conversions, which assume the
/// underlying closure is variable-agnostic (true for every structured
/// representation).
#[derive(Clone)]
pub struct PolyTransformation {
    pub label: String,
    pub arity: usize,
    pub sources: Vec<Arc<FormalGroupLaw>>,
    pub target: Arc<FormalGroupLaw>,
    pub blocks: Vec<Vec<SymbolId>>,
    pub budget: TruncationBudget,
    eval: Arc<dyn Fn(&[SparsePoly]) -> Result<SparsePoly, OpsError> + Send + Sync>,
}

impl core::fmt::Debug for PolyTransformation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("PolyTransformation").field("label", &self.label).field("arity", &self.arity).finish()
    }
}

impl PolyTransformation {
    pub fn new<F>(
        label: &str,
        sources: Vec<Arc<FormalGroupLaw>>,
        target: Arc<FormalGroupLaw>,
        budget: &TruncationBudget,
        eval: F,
    ) -> Self
    where
        F: Fn(&[SparsePoly]) -> Result<SparsePoly, OpsError> + Send + Sync + 'static,
    {
        PolyTransformation {
            label: String::from(label),
            arity: sources.len(),
            sources,
            target,
            blocks: Vec::new(),
            budget: budget.clone(),
            eval: Arc::new(eval),
        }
    }

    pub fn with_blocks(mut self, blocks: Vec<Vec<SymbolId>>) -> Self {
        assert_eq!(blocks.len(), self.arity, "one block per slot");
        self.blocks = blocks;
        self
    }

    pub fn eval(&self, args: &[SparsePoly]) -> Result<SparsePoly, OpsError> {
        if args.len() != self.arity {
            return Err(OpsError::ArityMismatch { expected: self.arity, got: args.len() });
        }
        (self.eval)(args)
    }
}

/// Bridge a transformation into the discrete-calculus map carrier.
pub fn as_map(g: &Transformation, budget: &TruncationBudget) -> MapBox {
    let g2 = g.clone();
    let budget = budget.clone();
    let ring = g.target.ring.clone();
    MapBox::new(&g.label, 1, &ring, move |args| {
        g2.eval(&args[0], &budget).map_err(|e| TaylorError::Eval(e.to_string()))
    })
}

/// The `q`-th discrete derivative of `g` as a `(q+1)`-slot map over
/// disjoint argument blocks.
pub fn derived_poly(g: &Transformation, q: i32) -> PolyTransformation {
    let mb = as_map(g, &g.budget);
    let d = taylor::iterated_derivative(&mb, q);
    let arity = if q < 0 { 0 } else { (q + 1) as usize };
    let sources = vec![g.source.clone(); arity];
    PolyTransformation::new(
        &format!("derived^{q}({})", g.label),
        sources,
        g.target.clone(),
        &g.budget,
        move |args| d.eval(args).map_err(OpsError::from),
    )
}

fn rename_map(from: &[SymbolId], to: &[SymbolId], ring: &Arc<GeneratorSet>) -> Vec<(SymbolId, SparsePoly)> {
    from.iter().zip(to.iter()).map(|(&f, &t)| (f, SparsePoly::variable(ring, t))).collect()
}

/// Diagonal form of an external multi-slot map: arguments arrive in one
/// shared variable set, are relabelled into the blocks, and every block of
/// the image is relabelled back to the shared set.
pub fn external_to_internal(h: &PolyTransformation, shared: &[SymbolId]) -> Result<PolyTransformation, OpsError> {
    if h.blocks.len() != h.arity {
        return Err(OpsError::Unsupported { detail: String::from("external map needs one variable block per slot") });
    }
    for b in &h.blocks {
        if b.len() != shared.len() {
            return Err(OpsError::Unsupported { detail: String::from("block sizes must match the shared set") });
        }
    }
    let inner = h.clone();
    let shared: Vec<SymbolId> = shared.to_vec();
    let shared_blocks = vec![shared.clone(); h.arity];
    let budget = h.budget.clone();
    let out = PolyTransformation::new(
        &format!("internal({})", h.label),
        h.sources.clone(),
        h.target.clone(),
        &h.budget,
        move |args| {
            let mut renamed = Vec::with_capacity(args.len());
            for (i, a) in args.iter().enumerate() {
                renamed.push(a.substitute(&rename_map(&shared, &inner.blocks[i], a.ring()), &budget)?);
            }
            let image = inner.eval(&renamed)?;
            let mut back: Vec<(SymbolId, SparsePoly)> = Vec::new();
            for b in &inner.blocks {
                back.extend(rename_map(b, &shared, image.ring()));
            }
            Ok(image.substitute(&back, &budget)?)
        },
    );
    Ok(out.with_blocks(shared_blocks))
}

/// Reinterpret an internal (shared-variable) multi-slot map as an external
/// one over disjoint blocks.  Sound for variable-agnostic closures, which
/// all structured representations are.
pub fn internal_to_external(h: &PolyTransformation, blocks: &[Vec<SymbolId>]) -> PolyTransformation {
    let inner = h.clone();
    let out = PolyTransformation::new(
        &format!("external({})", h.label),
        h.sources.clone(),
        h.target.clone(),
        &h.budget,
        move |args| inner.eval(args),
    );
    out.with_blocks(blocks.to_vec())
}

/// Check the interchange laws of a multi-slot map one slot at a time, the
/// other slots held fixed at the first sample of their block.
pub fn check_axioms_poly(
    h: &PolyTransformation,
    ctxs: &[AxiomContext],
    slot_samples: &[Vec<SparsePoly>],
) -> Result<AxiomReport, OpsError> {
    if ctxs.len() != h.arity || slot_samples.len() != h.arity {
        return Err(OpsError::ArityMismatch { expected: h.arity, got: ctxs.len().min(slot_samples.len()) });
    }
    let mut report = AxiomReport::default();
    for i in 0..h.arity {
        let fixed: Vec<SparsePoly> = slot_samples
            .iter()
            .map(|samples| samples.first().cloned().expect("nonempty sample block"))
            .collect();
        let hh = h.clone();
        let zero_args: Vec<SparsePoly> = {
            let mut a = fixed.clone();
            a[i] = SparsePoly::zero(fixed[i].ring());
            a
        };
        let eval = move |alpha: &SparsePoly| -> Result<SparsePoly, OpsError> {
            let mut args = fixed.clone();
            args[i] = alpha.clone();
            let raw = hh.eval(&args)?;
            let mut zargs = zero_args.clone();
            zargs[i] = SparsePoly::zero(alpha.ring());
            Ok(raw.sub(&hh.eval(&zargs)?)?)
        };
        let sub = check_axioms_unary(&eval, &h.sources[i], &h.target, &ctxs[i], &ctxs[i].compare, &slot_samples[i])?;
        for mut c in sub.checks {
            c.name = format!("slot {i}: {}", c.name);
            report.checks.push(c);
        }
    }
    Ok(report)
}

/// A library of sample series in three variables with zero constant term:
/// singles, sums, products, powers and mixed shapes, optionally seasoned
/// with a coefficient generator.
pub fn standard_sample_library(
    ring: &Arc<GeneratorSet>,
    z: &[SymbolId],
    coeff: Option<SymbolId>,
) -> Vec<SparsePoly> {
    assert!(z.len() >= 3, "need three sample variables");
    let (z1, z2, z3) = (z[0], z[1], z[2]);
    let v = |s: SymbolId| SparsePoly::variable(ring, s);
    let n = |k: i64| BigRational::from_integer(BigInt::from(k));
    let big = TruncationBudget::unbounded();
    let mul = |a: &SparsePoly, b: &SparsePoly| a.mul(b, &big).expect("same ring");
    let add = |a: &SparsePoly, b: &SparsePoly| a.add(b).expect("same ring");

    let mut lib = vec![
        v(z1),
        v(z2),
        v(z3),
        add(&v(z1), &v(z2)),
        add(&add(&v(z1), &v(z2)), &v(z3)),
        mul(&v(z1), &v(z2)),
        mul(&mul(&v(z1), &v(z2)), &v(z3)),
        mul(&v(z1), &v(z1)),
        mul(&mul(&v(z1), &v(z1)), &v(z1)),
        mul(&mul(&v(z1), &v(z1)), &v(z2)),
        add(&add(&mul(&v(z1), &v(z2)), &mul(&v(z2), &v(z3))), &mul(&v(z1), &v(z3))),
        add(&v(z1), &mul(&v(z1), &v(z1))),
        v(z1).sub(&v(z2)).expect("same ring"),
        add(&v(z1).scalar_mul(&n(2)), &v(z2).scalar_mul(&n(3))),
        add(&mul(&v(z1), &v(z1)), &mul(&v(z2), &v(z2))),
        add(&mul(&v(z1), &v(z1)), &mul(&v(z1), &v(z2)).scalar_mul(&n(-2))),
        v(z3).scalar_mul(&n(5)),
        add(&v(z1), &mul(&v(z2), &v(z3))),
        mul(&mul(&v(z1), &v(z1)), &mul(&v(z2), &v(z2))),
        add(&add(&v(z1), &v(z2).scalar_mul(&n(2))), &add(&v(z3).scalar_mul(&n(3)), &mul(&mul(&v(z1), &v(z2)), &v(z3)))),
    ];
    if let Some(c) = coeff {
        let cv = v(c);
        lib.push(mul(&cv, &v(z1)));
        lib.push(add(&mul(&cv, &mul(&v(z1), &v(z2))), &mul(&v(z2), &v(z2))));
    }
    lib
}

/// Sampled continuity check: images of the monomial ideal
/// `⟨∏ zᵢ^{dᵢ}⟩` must land in the same ideal over the target, and congruent
/// inputs must have congruent images.  Requires `G(0) = 0`.
pub fn continuity_check(
    g: &Transformation,
    ring: &Arc<GeneratorSet>,
    ideal: &[(SymbolId, u32)],
    zvars: &[SymbolId],
    count: usize,
    seed: u64,
    budget: &TruncationBudget,
) -> Result<bool, OpsError> {
    let zero = SparsePoly::zero(ring);
    if !g.eval(&zero, budget)?.is_zero() {
        return Err(OpsError::NotFiltered { detail: String::from("image of 0 is nonzero") });
    }
    let mut gen_mon: Vec<(SymbolId, i32)> = Vec::new();
    for &(s, d) in ideal {
        gen_mon.push((s, d as i32));
    }
    let gen_mon = Monomial::from_pairs(gen_mon)?;

    let in_ideal = |p: &SparsePoly| -> bool {
        p.iter().all(|(m, _)| ideal.iter().all(|&(s, d)| m.exp(s) >= d as i32))
    };

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let r = taylor::random_polynomial(ring, zvars, 2, 3, 4, &mut rng);
        let member = r.mul(&SparsePoly::term(ring, gen_mon.clone(), BigRational::one()), budget)?;
        let image = g.eval(&member, budget)?;
        if !in_ideal(&image) {
            return Ok(false);
        }
        // Congruence: x and x + member have images congruent mod the ideal.
        let x = taylor::random_zero_constant(ring, zvars, 2, 3, 4, &mut rng);
        let x2 = x.add(&member)?;
        let diff = g.eval(&x2, budget)?.sub(&g.eval(&x, budget)?)?;
        if !in_ideal(&diff) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Working budget for a residue computation against `k` roots: enough cap
/// headroom and Laurent floor that every term influencing the result up to
/// the user budget survives the intermediate truncations.
pub fn residue_work_budget(law: &FormalGroupLaw, k: usize, budget: &TruncationBudget) -> TruncationBudget {
    let k = k as i64;
    let user_floor = match budget.laurent_floor {
        Some((s, f)) if s == law.t => f,
        _ => 0,
    };
    TruncationBudget {
        series_cap: budget.series_cap + k + 2 + user_floor,
        coefficient_cap: budget.coefficient_cap,
        laurent_floor: Some((law.t, user_floor.max(budget.series_cap + k + 2))),
    }
}

/// `Res_t numerator · ω(t) / (∏(t +_B μᵢ)·t)`: the Laurent division against
/// the shifted roots, weighted by the invariant density, evaluated at the
/// coefficient of `t^{-1}`.  The numerator must already be expressed in `t`
/// (it is consumed as a Laurent series) and should be computed under
/// [`residue_work_budget`].
pub fn residue_against(
    law: &FormalGroupLaw,
    numerator: &SparsePoly,
    roots: &[SymbolId],
    budget: &TruncationBudget,
) -> Result<SparsePoly, OpsError> {
    if roots.is_empty() {
        return Err(OpsError::Unsupported { detail: String::from("need at least one root") });
    }
    if numerator.is_zero() {
        return Ok(SparsePoly::zero(numerator.ring()));
    }
    let work = residue_work_budget(law, roots.len(), budget);
    if law.cap < work.series_cap {
        return Err(OpsError::Unsupported {
            detail: format!("law cap {} is too small for working cap {}", law.cap, work.series_cap),
        });
    }
    let ring = numerator.ring().clone();
    let t_var = SparsePoly::variable(&ring, law.t);
    let mut denom = t_var.clone();
    for &mu in roots {
        let shifted = law.formal_sum(&t_var, &SparsePoly::variable(&ring, mu), &work)?;
        denom = denom.mul(&shifted, &work)?;
    }
    let num_l = LaurentSeries::from_poly(numerator, law.t);
    let den_inv = LaurentSeries::from_poly(&denom, law.t).invert(&work)?;
    let quotient = num_l.mul(&den_inv, &work)?;
    let res = law.residue(&quotient, &work)?;
    Ok(res.truncate(budget))
}

/// Evaluate the residue factor of a divisor push-forward:
/// substitute `xᵢ ↦ t +_B μᵢ` into `G(∏ xᵢ · α)`, multiply by the invariant
/// density `ω(t)`, divide by `∏(t +_B μᵢ)·t` as a Laurent series in `t`,
/// and take the coefficient of `t^{-1}`.
pub fn pushforward_rhs(
    g: &Transformation,
    alpha: &SparsePoly,
    slots: &[SymbolId],
    roots: &[SymbolId],
    budget: &TruncationBudget,
) -> Result<SparsePoly, OpsError> {
    if slots.is_empty() || slots.len() != roots.len() {
        return Err(OpsError::Unsupported { detail: String::from("need matching nonempty slots and roots") });
    }
    let law = &g.target;
    let work = residue_work_budget(law, roots.len(), budget);
    if law.cap < work.series_cap {
        return Err(OpsError::Unsupported {
            detail: format!("target law cap {} is too small for working cap {}", law.cap, work.series_cap),
        });
    }

    let ring = alpha.ring().clone();
    let mut product = alpha.clone();
    for &s in slots {
        product = product.mul(&SparsePoly::variable(&ring, s), &work)?;
    }
    let image = g.eval(&product, &work)?;

    let t_var = SparsePoly::variable(&ring, law.t);
    let mut assignments = Vec::with_capacity(slots.len());
    for (&s, &mu) in slots.iter().zip(roots.iter()) {
        let shifted = law.formal_sum(&t_var, &SparsePoly::variable(&ring, mu), &work)?;
        assignments.push((s, shifted));
    }
    let numerator = image.substitute(&assignments, &work)?;
    residue_against(law, &numerator, roots, budget)
}

/// Split the linear coefficient of `γ = c₁·x + O(x²)` as `c₁ = tᵉ·unit`
/// and return `(γ·c₁⁻¹, c₁⁻¹)`.  Reverting the normalized series keeps the
/// Laurent depth of each order at the depth the answer actually has,
/// because no correction step re-divides by the `tᵉ` factor.  Returns
/// `None` when the linear coefficient has no such split; the caller then
/// reverts `γ` directly.
fn peel_linear_scale(
    gamma: &SparsePoly,
    x: SymbolId,
    t: SymbolId,
    budget: &TruncationBudget,
) -> Option<(SparsePoly, SparsePoly)> {
    let c1 = gamma.coefficient_of_power(x, 1);
    let series = LaurentSeries::from_poly(&c1, t);
    let e = series.min_exponent()?;
    let shift = Monomial::var(t).pow(i32::try_from(-e).ok()?).ok()?;
    let unit = c1
        .mul(&SparsePoly::term(gamma.ring(), shift.clone(), BigRational::one()), budget)
        .ok()?;
    let unit_inv = unit.invert_series(budget).ok()?;
    let c1_inv = unit_inv.mul(&SparsePoly::term(gamma.ring(), shift, BigRational::one()), budget).ok()?;
    let normalized = gamma.mul(&c1_inv, budget).ok()?;
    Some((normalized, c1_inv))
}

/// The law `F_B(x, y) = γ^{-1}(F_A(γ(x), γ(y)))` classified by the twisted
/// context: a change of series coordinate by `γ = x·unit` (or `t`-monomial
/// times unit, as for the total power operation) transports the source law
/// to its conjugate.
pub fn conjugated_law(
    a: &FormalGroupLaw,
    gamma: &SparsePoly,
    name: &str,
    budget: &TruncationBudget,
) -> Result<FormalGroupLaw, OpsError> {
    let ring = GeneratorSet::join(&a.ring, gamma.ring())?;
    let x = a.x;
    let y = a.y;
    let cap_i32 = budget.series_cap.min(i32::MAX as i64) as i32;
    let gamma = gamma.clone().into_ring(&ring)?;
    let gamma_y = gamma.substitute(&[(x, SparsePoly::variable(&ring, y))], budget)?;
    let twisted_args = a.f.clone().into_ring(&ring)?.substitute(&[(x, gamma.clone()), (y, gamma_y)], budget)?;
    let (base, scale) = match peel_linear_scale(&gamma, x, a.t, budget) {
        Some((normalized, c1_inv)) => (normalized, Some(c1_inv)),
        None => (gamma.clone(), None),
    };
    let base_inv = generalized_reversion(&base, x, cap_i32, budget)?;
    let invert_at = |w: &SparsePoly| -> Result<SparsePoly, OpsError> {
        let arg = match &scale {
            Some(s) => w.mul(s, budget)?,
            None => w.clone(),
        };
        Ok(base_inv.substitute(&[(x, arg)], budget)?)
    };
    let f = invert_at(&twisted_args)?;
    let exp = invert_at(&a.exp.clone().into_ring(&ring)?)?;
    let log = a.log.clone().into_ring(&ring)?.substitute(&[(x, gamma)], budget)?;
    let mut law = FormalGroupLaw {
        ring,
        name: String::from(name),
        x,
        y,
        t: a.t,
        f,
        exp,
        log,
        omega: SparsePoly::one(&a.ring),
        cap: budget.series_cap,
    };
    law.omega = law.invariant_differential(budget)?;
    Ok(law)
}

/// Coefficient map induced by a series coordinate change on a law with
/// exponential `e`: the normalized composite `Ê(x) = γ(e(c₀^{-1}·x))`
/// (where `c₀` is the linear coefficient of `γ∘e`) classifies the same law
/// as `γ∘e` and has unit linear term, so its coefficients are the images of
/// the universal exponential coefficients.  Returns `gens[i-1] ↦ [x^{i+1}] Ê`.
pub fn twisted_coefficient_map(
    law: &FormalGroupLaw,
    gamma: &SparsePoly,
    gens: &[SymbolId],
    budget: &TruncationBudget,
) -> Result<BTreeMap<SymbolId, SparsePoly>, OpsError> {
    let x = law.x;
    let xcap = gens.len() as i32 + 1;
    let ring = GeneratorSet::join(&law.ring, gamma.ring())?;
    let gamma = gamma.clone().into_ring(&ring)?;
    let lin = gamma.coefficient_of_power(x, 1);
    if lin.is_zero() {
        return Err(OpsError::Unsupported { detail: String::from("γ∘e has no linear term") });
    }
    // Rescaling by c₀⁻¹ (valuation v) lowers a term x^k t^j of γ∘e to
    // degree k + j − v·k, so the composite is assembled at a budget deep
    // enough that no term a reported coefficient depends on is cut early;
    // only the final coefficients are trimmed back to the caller's budget.
    let v = lin.series_valuation().unwrap_or(0).max(0);
    let inner = {
        let mut b = budget.clone();
        b.series_cap += i64::from(xcap);
        b.deepen_floor(law.t, v * i64::from(xcap))
    };

    let e = law.exp.clone().into_ring(&ring)?.truncate_var_above(x, xcap);
    // γ(e(x)), evaluated power by power so intermediate x-degrees stay
    // below the cutoff instead of ballooning inside a blind substitution.
    let mut w = SparsePoly::zero(&ring);
    let mut epow = SparsePoly::one(&ring);
    let mut held = 0i32;
    for (k, c) in gamma.univariate_in(x) {
        if k < 0 {
            return Err(OpsError::Unsupported { detail: String::from("γ has negative powers of its variable") });
        }
        while held < k {
            epow = epow.mul(&e, &inner)?.truncate_var_above(x, xcap);
            held += 1;
        }
        w = w.add(&c.mul(&epow, &inner)?)?;
    }
    let w = w.truncate_var_above(x, xcap);

    let c0 = w.coefficient_of_power(x, 1);
    if c0.is_zero() {
        return Err(OpsError::Unsupported { detail: String::from("γ∘e has no linear term") });
    }
    let c0_inv = c0.invert_series(&inner)?;
    // γ(e(c₀⁻¹x)), again power by power.
    let mut wn = SparsePoly::zero(&ring);
    let mut spow = SparsePoly::one(&ring);
    let mut scaled = 0i32;
    for (k, c) in w.univariate_in(x) {
        while scaled < k {
            spow = spow.mul(&c0_inv, &inner)?;
            scaled += 1;
        }
        let xk = SparsePoly::term(&ring, Monomial::var(x).pow(k)?, BigRational::one());
        wn = wn.add(&c.mul(&spow, &inner)?.mul(&xk, &inner)?)?;
    }
    let lin = wn.coefficient_of_power(x, 1);
    if !(lin.is_constant() && lin.constant_term().is_one()) {
        return Err(OpsError::Unsupported {
            detail: format!("normalized exponential has non-unit linear term {lin}"),
        });
    }
    let mut map = BTreeMap::new();
    for (i, &b) in gens.iter().enumerate() {
        map.insert(b, wn.coefficient_of_power(x, i as i32 + 2).truncate(budget));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fgl::{make_additive, make_multiplicative, make_universal};

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    /// A law plus a working ring extended by sample variables
    /// z1..z4, u, v and push-forward symbols s1, s2, m1, m2.
    struct Setup {
        law: Arc<FormalGroupLaw>,
        ring: Arc<GeneratorSet>,
        z: Vec<SymbolId>,
        u: SymbolId,
        v: SymbolId,
        slots: Vec<SymbolId>,
        roots: Vec<SymbolId>,
    }

    fn extend(law: FormalGroupLaw) -> Setup {
        let mut g = GeneratorSet::extend(&law.ring);
        let z = vec![g.series("z1"), g.series("z2"), g.series("z3"), g.series("z4")];
        let u = g.series("u");
        let v = g.series("v");
        let slots = vec![g.series("s1"), g.series("s2")];
        let roots = vec![g.series("m1"), g.series("m2")];
        let ring = g.freeze();
        Setup { law: Arc::new(law), ring, z, u, v, slots, roots }
    }

    fn ctx_for(s: &Setup, cap: i64) -> AxiomContext {
        AxiomContext {
            swap: (s.z[0], s.z[1]),
            kill: s.z[0],
            sum_slot: s.z[0],
            fresh: (s.u, s.v),
            rename: (s.z[0], s.z[3]),
            compare: TruncationBudget::series(cap),
        }
    }

    fn zvar(s: &Setup, i: usize) -> SparsePoly {
        SparsePoly::variable(&s.ring, s.z[i])
    }

    #[test]
    fn identity_and_power_evaluate_directly() {
        let s = extend(make_additive(6));
        let budget = TruncationBudget::series(6);
        let id = Transformation::identity(&s.law, &budget);
        let alpha = zvar(&s, 0).add(&zvar(&s, 1).scalar_mul(&q(3))).unwrap();
        assert_eq!(id.eval(&alpha, &budget).unwrap(), alpha);

        let sq = Transformation::power(&s.law, 2, &budget);
        let got = sq.eval(&zvar(&s, 0).add(&zvar(&s, 1)).unwrap(), &budget).unwrap();
        let want = zvar(&s, 0)
            .pow(2, &budget)
            .unwrap()
            .add(&zvar(&s, 0).mul(&zvar(&s, 1), &budget).unwrap().scalar_mul(&q(2)))
            .unwrap()
            .add(&zvar(&s, 1).pow(2, &budget).unwrap())
            .unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn multiplicative_applies_gamma_per_variable() {
        let s = extend(make_universal(5, 5));
        let budget = TruncationBudget::series(5);
        let x = s.law.x;
        let xv = SparsePoly::variable(&s.ring, x);
        let tv = SparsePoly::variable(&s.ring, s.law.t);
        // γ(x) = x·(x +_F t)
        let gamma = xv.mul(&s.law.formal_sum(&xv, &tv, &budget).unwrap(), &budget).unwrap();
        let g = Transformation {
            label: String::from("genus"),
            source: s.law.clone(),
            target: s.law.clone(),
            repr: Repr::Multiplicative { gamma: gamma.clone(), phi: BTreeMap::new() },
            budget: budget.clone(),
        };
        let got = g.eval(&zvar(&s, 0), &budget).unwrap();
        let want = gamma.substitute(&[(x, zvar(&s, 0))], &budget).unwrap();
        assert_eq!(got, want);

        // t passes through untouched: α = t·z₁ maps to t·γ(z₁).
        let talpha = tv.mul(&zvar(&s, 0), &budget).unwrap();
        let got_t = g.eval(&talpha, &budget).unwrap();
        let want_t = tv.mul(&want, &budget).unwrap();
        assert_eq!(got_t, want_t);
    }

    #[test]
    fn sum_and_scaled_representations_combine_pointwise() {
        let s = extend(make_additive(5));
        let budget = TruncationBudget::series(5);
        let g = Transformation {
            label: String::from("id+2·sq"),
            source: s.law.clone(),
            target: s.law.clone(),
            repr: Repr::Sum(vec![Repr::Identity, Repr::Scaled(q(2), Box::new(Repr::Power(2)))]),
            budget: budget.clone(),
        };
        let alpha = zvar(&s, 0);
        let want = alpha.add(&alpha.pow(2, &budget).unwrap().scalar_mul(&q(2))).unwrap();
        assert_eq!(g.eval(&alpha, &budget).unwrap(), want);
    }

    #[test]
    fn structured_representations_pass_the_axioms() {
        for law in [make_additive(4), make_multiplicative(4)] {
            let s = extend(law);
            let budget = TruncationBudget::series(4);
            let samples = standard_sample_library(&s.ring, &s.z, None);
            let ctx = ctx_for(&s, 4);
            for g in [
                Transformation::identity(&s.law, &budget),
                Transformation::power(&s.law, 2, &budget),
                Transformation::power(&s.law, 3, &budget),
            ] {
                let report = check_axioms(&g, &ctx, &samples).unwrap();
                assert!(report.all_passed(), "{} over {}:\n{report}", g.label, s.law.name);
            }
        }
    }

    #[test]
    fn broken_gamma_fails_the_formal_sum_axiom_with_witness() {
        let s = extend(make_additive(4));
        let budget = TruncationBudget::series(4);
        let x = s.law.x;
        let xv = SparsePoly::variable(&s.ring, x);
        let gamma = xv.add(&xv.pow(2, &budget).unwrap()).unwrap();
        // Source and target both additive: γ ≠ x makes the formal-sum law fail.
        let g = Transformation {
            label: String::from("broken"),
            source: s.law.clone(),
            target: s.law.clone(),
            repr: Repr::Multiplicative { gamma, phi: BTreeMap::new() },
            budget: budget.clone(),
        };
        let samples = standard_sample_library(&s.ring, &s.z, None);
        let report = check_axioms(&g, &ctx_for(&s, 4), &samples).unwrap();
        assert!(!report.all_passed());
        let failed = report.failed();
        assert!(failed.iter().any(|c| c.name == "formal-sum"));
        assert!(failed.iter().all(|c| c.witness.is_some()));
    }

    #[test]
    fn conjugated_target_repairs_the_broken_gamma() {
        let s = extend(make_additive(8));
        let budget = TruncationBudget::series(4);
        let work = TruncationBudget::series(8);
        let x = s.law.x;
        let xv = SparsePoly::variable(&s.ring, x);
        let gamma = xv.add(&xv.pow(2, &work).unwrap()).unwrap();
        let conj = Arc::new(conjugated_law(&s.law, &gamma, "conjugate", &work).unwrap());

        // The conjugate is a genuine commutative unital law.
        let yv = SparsePoly::variable(&s.ring, s.law.y);
        let f = &conj.f;
        assert_eq!(f.substitute(&[(s.law.y, SparsePoly::zero(&s.ring))], &work).unwrap(), xv);
        let swapped = f
            .substitute(&[(x, yv.clone()), (s.law.y, xv.clone())], &work)
            .unwrap();
        assert_eq!(&swapped, f);
        // Exponential functional equation e(u + v) = F(e(u), e(v)).
        let eu = conj.exp.substitute(&[(x, SparsePoly::variable(&s.ring, s.u))], &work).unwrap();
        let ev = conj.exp.substitute(&[(x, SparsePoly::variable(&s.ring, s.v))], &work).unwrap();
        let lhs = conj
            .exp
            .substitute(
                &[(x, SparsePoly::variable(&s.ring, s.u).add(&SparsePoly::variable(&s.ring, s.v)).unwrap())],
                &work,
            )
            .unwrap()
            .truncate(&budget);
        let rhs = conj.formal_sum(&eu, &ev, &work).unwrap().truncate(&budget);
        assert_eq!(lhs, rhs);

        let g = Transformation {
            label: String::from("repaired"),
            source: s.law.clone(),
            target: conj,
            repr: Repr::Multiplicative {
                gamma: gamma.clone(),
                phi: BTreeMap::new(),
            },
            budget: work.clone(),
        };
        let samples = standard_sample_library(&s.ring, &s.z, None);
        let report = check_axioms(&g, &ctx_for(&s, 4), &samples).unwrap();
        assert!(report.all_passed(), "{report}");
    }

    #[test]
    fn twisted_map_for_identity_gamma_is_identity() {
        let law = make_universal(4, 4);
        let gens: Vec<SymbolId> = (1..=3).map(|i| law.ring.id(&format!("b{i}")).unwrap()).collect();
        let budget = TruncationBudget::series(10);
        let gamma = SparsePoly::variable(&law.ring, law.x);
        let map = twisted_coefficient_map(&law, &gamma, &gens, &budget).unwrap();
        for &b in &gens {
            assert_eq!(map[&b], SparsePoly::variable(&law.ring, b));
        }
    }

    #[test]
    fn twisted_map_for_shift_gamma_matches_hand_expansion() {
        let law = make_universal(4, 4);
        let gens: Vec<SymbolId> = (1..=3).map(|i| law.ring.id(&format!("b{i}")).unwrap()).collect();
        let budget = TruncationBudget::series(10);
        let xv = SparsePoly::variable(&law.ring, law.x);
        let gamma = xv.add(&xv.pow(2, &budget).unwrap()).unwrap();
        let map = twisted_coefficient_map(&law, &gamma, &gens, &budget).unwrap();

        let b = |i: usize| SparsePoly::variable(&law.ring, gens[i - 1]);
        let one = SparsePoly::one(&law.ring);
        assert_eq!(map[&gens[0]], b(1).add(&one).unwrap());
        assert_eq!(map[&gens[1]], b(2).add(&b(1).scalar_mul(&q(2))).unwrap());
        let want3 = b(3)
            .add(&b(1).pow(2, &budget).unwrap())
            .unwrap()
            .add(&b(2).scalar_mul(&q(2)))
            .unwrap();
        assert_eq!(map[&gens[2]], want3);
    }

    /// The twisted coefficient map classifies the law whose exponential is
    /// `γ∘e`: substituting φ̂ into the coefficients of `F` must reproduce
    /// `γ(F(γ^{-1}(u), γ^{-1}(v)))`, computed here by direct composition.
    #[test]
    fn twisted_map_agrees_with_conjugation() {
        let law = make_universal(6, 6);
        let gens: Vec<SymbolId> = (1..=6).map(|i| law.ring.id(&format!("b{i}")).unwrap()).collect();
        let mut g = GeneratorSet::extend(&law.ring);
        let u = g.series("u");
        let v = g.series("v");
        let ring = g.freeze();
        let work = TruncationBudget::series(8);
        let compare = TruncationBudget::series(3);

        let xv = SparsePoly::variable(&ring, law.x);
        let gamma = xv.add(&xv.pow(2, &work).unwrap()).unwrap();

        let map = twisted_coefficient_map(&law, &gamma, &gens, &work).unwrap();
        let assignments: Vec<(SymbolId, SparsePoly)> =
            map.iter().map(|(&b, img)| (b, img.clone())).collect();
        let f_uv = law
            .f
            .clone()
            .into_ring(&ring)
            .unwrap()
            .substitute(&[(law.x, SparsePoly::variable(&ring, u)), (law.y, SparsePoly::variable(&ring, v))], &work)
            .unwrap();
        let lhs = f_uv.substitute(&assignments, &work).unwrap().truncate(&compare);

        let gamma_inv = crate::fgl::series_reversion(&gamma, law.x, &work).unwrap();
        let gi_u = gamma_inv.substitute(&[(law.x, SparsePoly::variable(&ring, u))], &work).unwrap();
        let gi_v = gamma_inv.substitute(&[(law.x, SparsePoly::variable(&ring, v))], &work).unwrap();
        let mid = law
            .f
            .clone()
            .into_ring(&ring)
            .unwrap()
            .substitute(&[(law.x, gi_u), (law.y, gi_v)], &work)
            .unwrap();
        let rhs = gamma.substitute(&[(law.x, mid)], &work).unwrap().truncate(&compare);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn derived_power_two_is_twice_the_cross_product() {
        let s = extend(make_additive(6));
        let budget = TruncationBudget::series(6);
        let g = Transformation::power(&s.law, 2, &budget);
        let d = derived_poly(&g, 1);
        let got = d.eval(&[zvar(&s, 0), zvar(&s, 1)]).unwrap();
        let want = zvar(&s, 0).mul(&zvar(&s, 1), &budget).unwrap().scalar_mul(&q(2));
        assert_eq!(got, want);
    }

    #[test]
    fn derived_power_three_second_derivative() {
        let s = extend(make_additive(6));
        let budget = TruncationBudget::series(6);
        let g = Transformation::power(&s.law, 3, &budget);
        let d2 = derived_poly(&g, 2);
        let got = d2.eval(&[zvar(&s, 0), zvar(&s, 1), zvar(&s, 2)]).unwrap();
        let want = zvar(&s, 0)
            .mul(&zvar(&s, 1), &budget)
            .unwrap()
            .mul(&zvar(&s, 2), &budget)
            .unwrap()
            .scalar_mul(&q(6));
        assert_eq!(got, want);
    }

    #[test]
    fn derived_poly_passes_the_poly_axioms() {
        let s = extend(make_additive(4));
        let budget = TruncationBudget::series(4);
        let g = Transformation::power(&s.law, 2, &budget);
        let d = derived_poly(&g, 1);
        // One disjoint variable block per slot: substitutions aimed at one
        // slot must not touch the other slot's fixture.
        let block0 = [s.z[0], s.z[1], s.z[2]];
        let block1 = [s.slots[0], s.slots[1], s.roots[0]];
        let slot_samples = vec![
            standard_sample_library(&s.ring, &block0, None),
            standard_sample_library(&s.ring, &block1, None),
        ];
        let ctx0 = AxiomContext {
            swap: (block0[0], block0[1]),
            kill: block0[0],
            sum_slot: block0[0],
            fresh: (s.u, s.v),
            rename: (block0[0], s.z[3]),
            compare: TruncationBudget::series(4),
        };
        let ctx1 = AxiomContext {
            swap: (block1[0], block1[1]),
            kill: block1[0],
            sum_slot: block1[0],
            fresh: (s.u, s.v),
            rename: (block1[0], s.roots[1]),
            compare: TruncationBudget::series(4),
        };
        let report = check_axioms_poly(&d, &[ctx0, ctx1], &slot_samples).unwrap();
        assert!(report.all_passed(), "{report}");
    }

    #[test]
    fn taylor_reconstruction_from_monomial_split() {
        let s = extend(make_additive(8));
        let budget = TruncationBudget::series(8);
        for g in [Transformation::power(&s.law, 2, &budget), Transformation::power(&s.law, 3, &budget)] {
            let alpha = zvar(&s, 0)
                .add(&zvar(&s, 1).pow(2, &budget).unwrap())
                .unwrap()
                .add(&zvar(&s, 0).mul(&zvar(&s, 1), &budget).unwrap())
                .unwrap();
            let monomials: Vec<SparsePoly> = alpha
                .iter()
                .map(|(m, c)| SparsePoly::term(&s.ring, m.clone(), c.clone()))
                .collect();
            assert_eq!(monomials.len(), 3);
            let mb = as_map(&g, &budget);
            let expanded = taylor::taylor_expand(&mb, &monomials, &[]).unwrap();
            assert_eq!(expanded, g.eval(&alpha, &budget).unwrap());
        }
    }

    #[test]
    fn internal_external_roundtrip_on_derived_power() {
        let s = extend(make_additive(6));
        let budget = TruncationBudget::series(6);
        let g = Transformation::power(&s.law, 2, &budget);
        // External over blocks (z1, z2) and (z3, z4); shared set (u, v).
        let blocks = vec![vec![s.z[0], s.z[1]], vec![s.z[2], s.z[3]]];
        let ext = derived_poly(&g, 1).with_blocks(blocks.clone());
        let shared = vec![s.u, s.v];
        let int = external_to_internal(&ext, &shared).unwrap();
        let ext2 = internal_to_external(&int, &blocks);
        let back = external_to_internal(&ext2, &shared).unwrap();

        let a1 = SparsePoly::variable(&s.ring, s.u)
            .add(&SparsePoly::variable(&s.ring, s.v).pow(2, &budget).unwrap())
            .unwrap();
        let a2 = SparsePoly::variable(&s.ring, s.v).scalar_mul(&q(3));
        let lhs = int.eval(&[a1.clone(), a2.clone()]).unwrap();
        let rhs = back.eval(&[a1.clone(), a2.clone()]).unwrap();
        assert_eq!(lhs, rhs);
        // And the internal form agrees with direct evaluation on shared args.
        let direct = derived_poly(&g, 1).eval(&[a1, a2]).unwrap();
        assert_eq!(lhs, direct);
    }

    #[test]
    fn continuity_holds_for_identity_and_power() {
        let s = extend(make_additive(6));
        let budget = TruncationBudget::series(6);
        let ideal = [(s.z[0], 1u32)];
        let zv = [s.z[0], s.z[1], s.z[2]];
        let id = Transformation::identity(&s.law, &budget);
        assert!(continuity_check(&id, &s.ring, &ideal, &zv, 20, 3, &budget).unwrap());
        let sq = Transformation::power(&s.law, 2, &budget);
        assert!(continuity_check(&sq, &s.ring, &ideal, &zv, 20, 3, &budget).unwrap());
        let two = [(s.z[0], 1u32), (s.z[1], 2u32)];
        assert!(continuity_check(&sq, &s.ring, &two, &zv, 20, 4, &budget).unwrap());
    }

    #[test]
    fn continuity_rejects_a_shifted_map() {
        let s = extend(make_additive(6));
        let budget = TruncationBudget::series(6);
        let shifted = Transformation {
            label: String::from("shift"),
            source: s.law.clone(),
            target: s.law.clone(),
            repr: Repr::BlackBox(Arc::new(|alpha, _| {
                Ok(alpha.add(&SparsePoly::one(alpha.ring()))?)
            })),
            budget: budget.clone(),
        };
        assert!(matches!(
            continuity_check(&shifted, &s.ring, &[(s.z[0], 1)], &[s.z[0]], 5, 1, &budget),
            Err(OpsError::NotFiltered { .. })
        ));
    }

    #[test]
    fn pushforward_identity_returns_the_argument() {
        for law in [make_additive(10), make_multiplicative(10), make_universal(10, 10)] {
            let s = extend(law);
            let budget = TruncationBudget::series(5);
            let g = Transformation::identity(&s.law, &budget);
            let samples = [
                zvar(&s, 0),
                zvar(&s, 0).add(&zvar(&s, 1).scalar_mul(&q(2))).unwrap(),
                zvar(&s, 0).mul(&zvar(&s, 1), &budget).unwrap(),
                SparsePoly::one(&s.ring),
            ];
            for alpha in &samples {
                let got = pushforward_rhs(&g, alpha, &s.slots[..1], &s.roots[..1], &budget).unwrap();
                assert_eq!(&got, alpha, "law {}", s.law.name);
            }
        }
    }

    #[test]
    fn pushforward_power_two_single_root_additive() {
        let s = extend(make_additive(10));
        let budget = TruncationBudget::series(5);
        let g = Transformation::power(&s.law, 2, &budget);
        let got = pushforward_rhs(&g, &SparsePoly::one(&s.ring), &s.slots[..1], &s.roots[..1], &budget).unwrap();
        // Res[(t+μ)²/((t+μ)t)] = Res[(t+μ)/t] = μ.
        assert_eq!(got, SparsePoly::variable(&s.ring, s.roots[0]));
    }

    #[test]
    fn pushforward_identity_two_roots_additive() {
        let s = extend(make_additive(10));
        let budget = TruncationBudget::series(5);
        let g = Transformation::identity(&s.law, &budget);
        let got = pushforward_rhs(&g, &SparsePoly::one(&s.ring), &s.slots, &s.roots, &budget).unwrap();
        assert_eq!(got, SparsePoly::one(&s.ring));
    }

    #[test]
    fn derived_matches_direct_difference() {
        let s = extend(make_multiplicative(6));
        let budget = TruncationBudget::series(6);
        let g = Transformation::power(&s.law, 2, &budget);
        let d = derived_poly(&g, 1);
        let (a, b) = (zvar(&s, 0).add(&zvar(&s, 2)).unwrap(), zvar(&s, 1).scalar_mul(&q(2)));
        let lhs = d.eval(&[a.clone(), b.clone()]).unwrap();
        let rhs = g
            .eval(&a.add(&b).unwrap(), &budget)
            .unwrap()
            .sub(&g.eval(&a, &budget).unwrap())
            .unwrap()
            .sub(&g.eval(&b, &budget).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }
}
