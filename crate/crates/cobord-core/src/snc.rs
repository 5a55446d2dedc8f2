//! Divisors with strict normal crossings, modelled combinatorially.
//!
//! A divisor is a list of named components with positive multiplicities;
//! each component contributes a first Chern root `λ`, and the class of the
//! whole divisor is the formal sum `Σ^A [l_i]·λ_i`.  [`splitting_series`]
//! rewrites that sum as `Σ_{I} (∏_{i∈I} λ_i)·F_I` over the nonempty face
//! intersections, with every quotient taken exactly — no truncation noise
//! enters the recombination identity.  Two splitting conventions are
//! provided: the symmetric one extracts monomials supported on exactly the
//! face, the concentrated one telescopes along the component order and
//! lives entirely on single components.
//!
//! On top of the splitting sit the transport operators: [`pullback_dstar`]
//! restricts an ambient class to every face, [`pullback_fstar`] carries
//! face classes through a square of divisors described by an incidence
//! matrix, and [`check_mpeif`] verifies that push-forward and pull-back
//! commute around such a square.  [`gtil`] assembles the residue form of
//! `G` applied to a divisor push-forward — one Laurent residue per face,
//! glued with the face's own push-forward — and
//! [`check_subcentral_identity`] tests the discrete chain rule that
//! controls how those residues recombine under a base change.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::fgl::{FglError, FormalGroupLaw};
use crate::projops::{as_map, residue_against, residue_work_budget, OpsError, Transformation};
use crate::ring::{GeneratorSet, Monomial, RingError, SparsePoly, SymbolId, TruncationBudget};
use crate::taylor::{self, TaylorError, FAMILY_CAP};

/// Errors from divisor models and their transport operators.
#[derive(Debug, Clone)]
pub enum SncError {
    Ring(RingError),
    Fgl(FglError),
    Ops(OpsError),
    Taylor(TaylorError),
    /// The model data is inconsistent (dimensions, multiplicities, rings).
    BadModel { detail: String },
}

impl From<RingError> for SncError {
    fn from(e: RingError) -> Self {
        SncError::Ring(e)
    }
}

impl From<FglError> for SncError {
    fn from(e: FglError) -> Self {
        SncError::Fgl(e)
    }
}

impl From<OpsError> for SncError {
    fn from(e: OpsError) -> Self {
        SncError::Ops(e)
    }
}

impl From<TaylorError> for SncError {
    fn from(e: TaylorError) -> Self {
        SncError::Taylor(e)
    }
}

impl core::fmt::Display for SncError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SncError::Ring(e) => write!(f, "{e}"),
            SncError::Fgl(e) => write!(f, "{e}"),
            SncError::Ops(e) => write!(f, "{e}"),
            SncError::Taylor(e) => write!(f, "{e}"),
            SncError::BadModel { detail } => write!(f, "bad model: {detail}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SncError {}

/// A divisor with strict normal crossings over a fixed formal group law:
/// named components with multiplicities, one Chern-root symbol per
/// component, all living in a single ambient generator set.
#[derive(Debug, Clone)]
pub struct SNCModel {
    pub law: Arc<FormalGroupLaw>,
    pub ring: Arc<GeneratorSet>,
    /// Component names; also the names of the root symbols.
    pub names: Vec<String>,
    /// Multiplicity of each component, at least 1.
    pub mults: Vec<i64>,
    /// First Chern root of each component.
    pub roots: Vec<SymbolId>,
}

impl SNCModel {
    /// Build a model over `base` (which must extend the law's ring),
    /// adding one series symbol per component named after it.
    pub fn new(
        law: &Arc<FormalGroupLaw>,
        base: &Arc<GeneratorSet>,
        comps: &[(&str, i64)],
    ) -> Result<Self, SncError> {
        if comps.is_empty() {
            return Err(SncError::BadModel { detail: String::from("a divisor needs at least one component") });
        }
        if comps.len() > 16 {
            return Err(SncError::BadModel {
                detail: format!("{} components exceed the face-mask capacity of 16", comps.len()),
            });
        }
        let mut builder = GeneratorSet::extend(base);
        let mut names = Vec::with_capacity(comps.len());
        let mut mults = Vec::with_capacity(comps.len());
        let mut roots = Vec::with_capacity(comps.len());
        for &(name, m) in comps {
            if m < 1 {
                return Err(SncError::BadModel {
                    detail: format!("component {name} has multiplicity {m}; it must be at least 1"),
                });
            }
            names.push(String::from(name));
            mults.push(m);
            roots.push(builder.series(name));
        }
        let ring = builder.freeze();
        for i in 1..roots.len() {
            if roots[..i].contains(&roots[i]) {
                return Err(SncError::BadModel {
                    detail: format!("component name {} is not distinct", names[i]),
                });
            }
        }
        Ok(SNCModel { law: law.clone(), ring, names, mults, roots })
    }

    /// Number of components.
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// The class of the whole divisor: `Σ^A [l_i]·λ_i` over every component.
    pub fn full_series(&self, budget: &TruncationBudget) -> Result<SparsePoly, SncError> {
        series_over_mask(&self.law, &self.ring, &self.roots, &self.mults, (1u32 << self.len()) - 1, budget)
    }
}

/// Which splitting of the divisor class to use.  Both recombine to the
/// same full class; they differ in where the face classes live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// Exact-support extraction: `F_I` collects the monomials of the full
    /// class divisible by every root of `I` and by no other root.
    Standard,
    /// Telescoping along the component order: all classes live on single
    /// components, `F_I = 0` for `|I| ≥ 2`.
    Concentrated,
}

/// `Σ^A [l_i]·λ_i` over the components selected by `mask` (zero
/// multiplicities are skipped), folded in ascending component order.
fn series_over_mask(
    law: &FormalGroupLaw,
    ring: &Arc<GeneratorSet>,
    roots: &[SymbolId],
    mults: &[i64],
    mask: u32,
    budget: &TruncationBudget,
) -> Result<SparsePoly, SncError> {
    let mut acc = SparsePoly::zero(ring);
    for (i, (&root, &m)) in roots.iter().zip(mults.iter()).enumerate() {
        if mask & (1 << i) == 0 || m == 0 {
            continue;
        }
        let term = law.n_series(m, &SparsePoly::variable(ring, root), budget)?;
        acc = law.formal_sum(&acc, &term, budget)?;
    }
    Ok(acc)
}

/// Splitting for an arbitrary multiplicity vector; entries equal to zero
/// mean the component is absent, and no face touching an absent component
/// ever appears among the keys.
fn splitting_with_mults(
    law: &FormalGroupLaw,
    ring: &Arc<GeneratorSet>,
    roots: &[SymbolId],
    mults: &[i64],
    convention: Convention,
    budget: &TruncationBudget,
) -> Result<BTreeMap<u32, SparsePoly>, SncError> {
    let n = roots.len();
    let support: u32 =
        (0..n).filter(|&i| mults[i] != 0).fold(0, |acc, i| acc | (1 << i));
    let mut out = BTreeMap::new();
    match convention {
        Convention::Standard => {
            // Cache the partial sums: S over a sub-mask equals the full sum
            // with the other roots set to zero, so inclusion–exclusion over
            // sub-masks isolates the monomials supported on exactly the face.
            let mut partial: BTreeMap<u32, SparsePoly> = BTreeMap::new();
            for face in 1u32..(1 << n) {
                if face & !support != 0 {
                    continue;
                }
                let mut num = SparsePoly::zero(ring);
                let mut sub = face;
                loop {
                    if sub != 0 {
                        let s = match partial.get(&sub) {
                            Some(s) => s.clone(),
                            None => {
                                let s = series_over_mask(law, ring, roots, mults, sub, budget)?;
                                partial.insert(sub, s.clone());
                                s
                            }
                        };
                        let drop = (face.count_ones() - sub.count_ones()) % 2 == 1;
                        num = if drop { num.sub(&s)? } else { num.add(&s)? };
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & face;
                }
                let divisor = Monomial::from_pairs(
                    (0..n).filter(|&i| face & (1 << i) != 0).map(|i| (roots[i], 1)),
                )?;
                let class = num.div_monomial_exact(&divisor)?;
                if !class.is_zero() {
                    out.insert(face, class);
                }
            }
        }
        Convention::Concentrated => {
            let mut prev = SparsePoly::zero(ring);
            let mut prefix = 0u32;
            for (i, &root) in roots.iter().enumerate() {
                if mults[i] == 0 {
                    continue;
                }
                prefix |= 1 << i;
                let cur = series_over_mask(law, ring, roots, mults, prefix, budget)?;
                let step = cur.sub(&prev)?;
                let divisor = Monomial::from_pairs([(root, 1)])?;
                let class = step.div_monomial_exact(&divisor)?;
                if !class.is_zero() {
                    out.insert(1 << i, class);
                }
                prev = cur;
            }
        }
    }
    Ok(out)
}

/// Split the divisor class into face classes: a map from nonempty face
/// masks `I` to classes `F_I` with `Σ_I (∏_{i∈I} λ_i)·F_I = Σ^A [l]·λ`
/// exactly at the working precision.  Faces with vanishing class are
/// omitted.
pub fn splitting_series(
    model: &SNCModel,
    convention: Convention,
    budget: &TruncationBudget,
) -> Result<BTreeMap<u32, SparsePoly>, SncError> {
    splitting_with_mults(&model.law, &model.ring, &model.roots, &model.mults, convention, budget)
}

/// The face classes of the divisor itself.  Identical to
/// [`splitting_series`]: the class carried by the face `I` is `F_I`, and
/// pushing every face class forward recovers the divisor's ambient class.
pub fn divisor_class(
    model: &SNCModel,
    convention: Convention,
    budget: &TruncationBudget,
) -> Result<BTreeMap<u32, SparsePoly>, SncError> {
    splitting_series(model, convention, budget)
}

/// Push a collection of face classes into the ambient ring: each face
/// inclusion multiplies by its roots, `x_I ↦ (∏_{i∈I} λ_i)·x_I`.
pub fn ambient_pushforward(
    model: &SNCModel,
    classes: &BTreeMap<u32, SparsePoly>,
    budget: &TruncationBudget,
) -> Result<SparsePoly, SncError> {
    let mut total = SparsePoly::zero(&model.ring);
    for (&face, class) in classes {
        let mut pushed = class.clone();
        for (i, &root) in model.roots.iter().enumerate() {
            if face & (1 << i) != 0 {
                pushed = pushed.mul(&SparsePoly::variable(&model.ring, root), budget)?;
            }
        }
        total = total.add(&pushed)?;
    }
    Ok(total)
}

/// Restrict an ambient class to every face of the divisor: the face `I`
/// receives `x·F_I`.  Pushing the result forward gives `x·(Σ^A [l]·λ)`
/// whichever convention produced the splitting.
pub fn pullback_dstar(
    model: &SNCModel,
    x: &SparsePoly,
    convention: Convention,
    budget: &TruncationBudget,
) -> Result<BTreeMap<u32, SparsePoly>, SncError> {
    let split = splitting_series(model, convention, budget)?;
    let mut out = BTreeMap::new();
    for (face, class) in split {
        let restricted = x.mul(&class, budget)?;
        if !restricted.is_zero() {
            out.insert(face, restricted);
        }
    }
    Ok(out)
}

/// A square of divisors: a map from the `source` divisor to the `target`
/// divisor, described by how often each source component hits each target
/// component.  `incidence[i][j]` is the multiplicity of source component
/// `j` inside the pull-back of target component `i`; a zero row means the
/// target component misses the source entirely.
#[derive(Debug, Clone)]
pub struct SquareData {
    pub target: SNCModel,
    pub source: SNCModel,
    pub incidence: Vec<Vec<i64>>,
}

impl SquareData {
    /// Validate dimensions, signs, and that both models share one law and
    /// one symbol universe (the source ring must extend the target ring).
    pub fn new(target: SNCModel, source: SNCModel, incidence: Vec<Vec<i64>>) -> Result<Self, SncError> {
        if !Arc::ptr_eq(&target.law, &source.law) {
            return Err(SncError::BadModel { detail: String::from("source and target must share one law") });
        }
        if incidence.len() != target.len() {
            return Err(SncError::BadModel {
                detail: format!("incidence has {} rows for {} target components", incidence.len(), target.len()),
            });
        }
        for (i, row) in incidence.iter().enumerate() {
            if row.len() != source.len() {
                return Err(SncError::BadModel {
                    detail: format!("incidence row {i} has {} entries for {} source components", row.len(), source.len()),
                });
            }
            if row.iter().any(|&p| p < 0) {
                return Err(SncError::BadModel { detail: format!("incidence row {i} has a negative entry") });
            }
        }
        for (i, name) in target.names.iter().enumerate() {
            if source.ring.id(name) != Some(target.roots[i]) {
                return Err(SncError::BadModel {
                    detail: format!("source ring does not extend the target ring at root {name}"),
                });
            }
        }
        Ok(SquareData { target, source, incidence })
    }

    /// The substitution realizing the pull-back on ambient classes: each
    /// target root goes to the formal sum of its incidence multiples,
    /// `λ_i ↦ Σ^B [p_{ij}]·μ_j`; a zero row sends the root to zero.
    pub fn fstar_substitution(&self, budget: &TruncationBudget) -> Result<Vec<(SymbolId, SparsePoly)>, SncError> {
        let law = &self.source.law;
        let mut out = Vec::with_capacity(self.target.len());
        for (i, row) in self.incidence.iter().enumerate() {
            let image = series_over_mask(
                law,
                &self.source.ring,
                &self.source.roots,
                row,
                (1u32 << self.source.len()) - 1,
                budget,
            )?;
            out.push((self.target.roots[i], image));
        }
        Ok(out)
    }

    /// Pull an ambient class back along the square.
    pub fn fstar(&self, x: &SparsePoly, budget: &TruncationBudget) -> Result<SparsePoly, SncError> {
        let subst = self.fstar_substitution(budget)?;
        Ok(x.substitute(&subst, budget)?)
    }
}

/// Carry per-component classes on the target divisor through the square:
/// `x_i` on target component `i` lands on the source faces as
/// `Σ_i f^*(x_i)·F^{(p_i)}_J`, where `F^{(p_i)}` splits the pull-back
/// `Σ^B [p_{ij}]·μ_j` of the `i`-th component.  Faces touching a source
/// component with zero incidence under `i` receive nothing from `x_i`.
pub fn pullback_fstar(
    square: &SquareData,
    x: &[SparsePoly],
    convention: Convention,
    budget: &TruncationBudget,
) -> Result<BTreeMap<u32, SparsePoly>, SncError> {
    if x.len() != square.target.len() {
        return Err(SncError::BadModel {
            detail: format!("{} classes supplied for {} target components", x.len(), square.target.len()),
        });
    }
    let law = &square.source.law;
    let subst = square.fstar_substitution(budget)?;
    let mut out: BTreeMap<u32, SparsePoly> = BTreeMap::new();
    for (i, xi) in x.iter().enumerate() {
        if xi.is_zero() {
            continue;
        }
        let pulled = xi.substitute(&subst, budget)?;
        let split = splitting_with_mults(
            law,
            &square.source.ring,
            &square.source.roots,
            &square.incidence[i],
            convention,
            budget,
        )?;
        for (face, class) in split {
            let term = pulled.mul(&class, budget)?;
            let entry = match out.remove(&face) {
                Some(prev) => prev.add(&term)?,
                None => term,
            };
            out.insert(face, entry);
        }
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

/// Residual of the push-pull exchange around the square: pulling
/// per-component classes back to the source faces and pushing into the
/// source's ambient ring must agree with pushing into the target's ambient
/// ring first and pulling the result back.  Returns the difference, which
/// is zero exactly when the exchange holds.
pub fn check_mpeif(
    square: &SquareData,
    x: &[SparsePoly],
    convention: Convention,
    budget: &TruncationBudget,
) -> Result<SparsePoly, SncError> {
    let classes = pullback_fstar(square, x, convention, budget)?;
    let lhs = ambient_pushforward(&square.source, &classes, budget)?;

    let mut pushed = SparsePoly::zero(&square.target.ring);
    for (i, xi) in x.iter().enumerate() {
        let root = SparsePoly::variable(&square.target.ring, square.target.roots[i]);
        pushed = pushed.add(&xi.mul(&root, budget)?)?;
    }
    let rhs = square.fstar(&pushed, budget)?;
    Ok(lhs.sub(&rhs)?)
}

/// A refined pull-back square together with its excess normal data: the
/// Chern roots of the two normal bundles and of the excess bundle, and the
/// substitution realizing the pull-back maps on ambient classes.  The data
/// must satisfy `g^*(∏ f_normal) = (∏ fp_normal)·(∏ excess)`.
#[derive(Debug, Clone)]
pub struct ExcessSquare {
    pub ring: Arc<GeneratorSet>,
    /// Chern roots of the normal bundle of the original inclusion.
    pub f_normal: Vec<SymbolId>,
    /// Chern roots of the normal bundle of the refined inclusion.
    pub fp_normal: Vec<SymbolId>,
    /// Chern roots of the excess bundle.
    pub excess: Vec<SymbolId>,
    /// Substitution realizing the pull-back on ambient classes.
    pub g_pull: Vec<(SymbolId, SparsePoly)>,
}

/// Residual of the excess-intersection exchange: pulling a pushed-forward
/// class back must equal pushing forward after multiplying by the top
/// Chern class of the excess bundle.  With push-forwards modelled as
/// multiplication by the product of normal roots this reads
/// `g^*(v·∏ f_normal) − (∏ fp_normal)·(∏ excess)·g^*(v)`.
pub fn check_excess_divisor(
    square: &ExcessSquare,
    v: &SparsePoly,
    budget: &TruncationBudget,
) -> Result<SparsePoly, SncError> {
    let mut lhs = v.clone();
    for &r in &square.f_normal {
        lhs = lhs.mul(&SparsePoly::variable(&square.ring, r), budget)?;
    }
    let lhs = lhs.substitute(&square.g_pull, budget)?;

    let mut rhs = v.substitute(&square.g_pull, budget)?;
    for &r in square.fp_normal.iter().chain(square.excess.iter()) {
        rhs = rhs.mul(&SparsePoly::variable(&square.ring, r), budget)?;
    }
    Ok(lhs.sub(&rhs)?)
}

fn require_vanishing_at_zero(
    g: &Transformation,
    ring: &Arc<GeneratorSet>,
    budget: &TruncationBudget,
) -> Result<(), SncError> {
    let at_zero = g.eval(&SparsePoly::zero(ring), budget)?;
    if at_zero.is_zero() {
        Ok(())
    } else {
        Err(SncError::Ops(OpsError::NotFiltered {
            detail: format!("operation {} must send 0 to 0", g.label),
        }))
    }
}

/// Result of [`gtil`]: the per-face residue contributions (already pushed
/// into the ambient ring) and their sum.
#[derive(Debug, Clone)]
pub struct GtilResult {
    pub terms: BTreeMap<u32, SparsePoly>,
    pub total: SparsePoly,
}

/// The residue form of `G` applied to a divisor push-forward.  For every
/// nonempty face `J` of the model, evaluate the discrete derivative
/// `∂^{|J|−1}G` on the arguments `y_j·γ_j` (one fresh slot per component
/// of the face), substitute `y_j ↦ t +_B λ_j`, take the Laurent residue
/// against the shifted roots, and push the result into the ambient ring by
/// multiplying with `∏_{j∈J} λ_j`.  The slots must be series symbols of
/// the model's ring that appear in no `γ`.
pub fn gtil(
    g: &Transformation,
    model: &SNCModel,
    gamma: &[SparsePoly],
    slots: &[SymbolId],
    budget: &TruncationBudget,
) -> Result<GtilResult, SncError> {
    let n = model.len();
    if gamma.len() != n || slots.len() != n {
        return Err(SncError::BadModel {
            detail: format!("{} classes and {} slots supplied for {n} components", gamma.len(), slots.len()),
        });
    }
    if n > FAMILY_CAP {
        return Err(SncError::BadModel {
            detail: format!("{n} components exceed the derivative cap of {FAMILY_CAP}"),
        });
    }
    if !Arc::ptr_eq(&model.law, &g.target) {
        return Err(SncError::BadModel { detail: String::from("operation target law must be the model's law") });
    }
    let law = &model.law;
    let ring = &model.ring;
    let work = residue_work_budget(law, n, budget);
    require_vanishing_at_zero(g, ring, &work)?;

    let t_var = SparsePoly::variable(ring, law.t);
    let base = as_map(g, &work);
    let mut terms = BTreeMap::new();
    let mut total = SparsePoly::zero(ring);
    for face in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|&i| face & (1 << i) != 0).collect();
        let q = members.len() as i32 - 1;
        let derived = taylor::iterated_derivative(&base, q);

        let mut args = Vec::with_capacity(members.len());
        for &i in &members {
            args.push(SparsePoly::variable(ring, slots[i]).mul(&gamma[i], &work)?);
        }
        let value = derived.eval(&args)?;

        let mut assignments = Vec::with_capacity(members.len());
        let mut roots = Vec::with_capacity(members.len());
        for &i in &members {
            let shifted = law.formal_sum(&t_var, &SparsePoly::variable(ring, model.roots[i]), &work)?;
            assignments.push((slots[i], shifted));
            roots.push(model.roots[i]);
        }
        let numerator = value.substitute(&assignments, &work)?;
        let residue = residue_against(law, &numerator, &roots, budget)?;

        let mut pushed = residue;
        for &i in &members {
            pushed = pushed.mul(&SparsePoly::variable(ring, model.roots[i]), budget)?;
        }
        if !pushed.is_zero() {
            total = total.add(&pushed)?;
            terms.insert(face, pushed);
        }
    }
    Ok(GtilResult { terms, total })
}

/// Verify the discrete chain rule governing a face `J₁` of the source
/// divisor of a square.  With `μ̃_j = t +_B μ_j`, `μ̃_I = Σ^B_{j∈I}
/// [m_j]·μ̃_j`, and the difference kernels `D_{I'} = Σ_{I⊆I'}
/// (−1)^{|I'|−|I|} μ̃_I`, the sum of `∂^{|S|−1}G` over all families `S` of
/// nonempty sub-faces covering `J₁`, evaluated on `D_{I'}·f^*γ`, must
/// equal the inclusion–exclusion of `G(μ̃_I·f^*γ)` over nonempty
/// `I ⊆ J₁`.  Returns the residual, zero exactly when the rule holds.
pub fn check_subcentral_identity(
    g: &Transformation,
    square: &SquareData,
    gamma: &SparsePoly,
    j1: u32,
    budget: &TruncationBudget,
) -> Result<SparsePoly, SncError> {
    let model = &square.source;
    let n = model.len();
    if j1 == 0 || j1 >= (1 << n) {
        return Err(SncError::BadModel { detail: format!("face mask {j1:#b} is not a face of the source") });
    }
    let size = j1.count_ones() as usize;
    if size > FAMILY_CAP {
        return Err(SncError::BadModel {
            detail: format!("face of {size} components exceeds the derivative cap of {FAMILY_CAP}"),
        });
    }
    let law = &model.law;
    let ring = &model.ring;
    if law.cap < budget.series_cap {
        return Err(SncError::BadModel {
            detail: format!("law cap {} is below the working cap {}", law.cap, budget.series_cap),
        });
    }
    if !Arc::ptr_eq(law, &g.target) {
        return Err(SncError::BadModel { detail: String::from("operation target law must be the square's law") });
    }
    require_vanishing_at_zero(g, ring, budget)?;

    let fgamma = square.fstar(gamma, budget)?;
    let t_var = SparsePoly::variable(ring, law.t);

    // μ̃ over single components and their formal m-weighted sums per face.
    let mut shifted = BTreeMap::new();
    for i in 0..n {
        if j1 & (1 << i) != 0 {
            let s = law.formal_sum(&t_var, &SparsePoly::variable(ring, model.roots[i]), budget)?;
            shifted.insert(i, s);
        }
    }
    let mut mtil: BTreeMap<u32, SparsePoly> = BTreeMap::new();
    let mut sub = j1;
    loop {
        if sub != 0 {
            let mut acc = SparsePoly::zero(ring);
            for i in 0..n {
                if sub & (1 << i) != 0 {
                    let term = law.n_series(model.mults[i], &shifted[&i], budget)?;
                    acc = law.formal_sum(&acc, &term, budget)?;
                }
            }
            mtil.insert(sub, acc);
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & j1;
    }

    // Difference kernels over every nonempty sub-face.
    let mut kernels: BTreeMap<u32, SparsePoly> = BTreeMap::new();
    for (&face, _) in &mtil {
        let mut acc = SparsePoly::zero(ring);
        let mut inner = face;
        loop {
            if inner != 0 {
                let drop = (face.count_ones() - inner.count_ones()) % 2 == 1;
                acc = if drop { acc.sub(&mtil[&inner])? } else { acc.add(&mtil[&inner])? };
            }
            if inner == 0 {
                break;
            }
            inner = (inner - 1) & face;
        }
        kernels.insert(face, acc);
    }

    let base = as_map(g, budget);
    let subfaces: Vec<u32> = mtil.keys().copied().collect();
    let mut lhs = SparsePoly::zero(ring);
    for selector in 1u32..(1 << subfaces.len()) {
        let chosen: Vec<u32> = subfaces
            .iter()
            .enumerate()
            .filter(|&(k, _)| selector & (1 << k) != 0)
            .map(|(_, &f)| f)
            .collect();
        if chosen.iter().fold(0u32, |a, &f| a | f) != j1 {
            continue;
        }
        let derived = taylor::iterated_derivative(&base, chosen.len() as i32 - 1);
        let mut args = Vec::with_capacity(chosen.len());
        for &f in &chosen {
            args.push(kernels[&f].mul(&fgamma, budget)?);
        }
        lhs = lhs.add(&derived.eval(&args)?)?;
    }

    let mut rhs = SparsePoly::zero(ring);
    for (&face, m) in &mtil {
        let value = g.eval(&m.mul(&fgamma, budget)?, budget)?;
        let drop = (j1.count_ones() - face.count_ones()) % 2 == 1;
        rhs = if drop { rhs.sub(&value)? } else { rhs.add(&value)? };
    }

    Ok(lhs.sub(&rhs)?)
}
