//! Named generators and the shared generator-set table.
//!
//! A [`GeneratorSet`] is an append-only list of generators; polynomials hold
//! an `Arc` to the set they were built over.  Two sets are compatible when
//! one is a prefix extension of the other, which keeps every [`SymbolId`]
//! stable across extensions — the standard workflow is to build a base ring,
//! freeze it, and extend it with scratch variables as a computation needs
//! them.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::RingError;

/// Index of a generator inside its [`GeneratorSet`] (stable under extension).
pub type SymbolId = u32;

/// How a generator participates in truncation.
///
/// `Series` generators (z, t, x, y, λ, μ, … — all of formal degree 1) are the
/// variables the series cap counts; `Coefficient` generators (b_i of degree
/// −i, β of degree −1, …) live in the ground ring and are only bounded by the
/// optional coefficient cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Series,
    Coefficient,
}

/// One named generator with its grading data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub degree: i64,
    pub kind: SymbolKind,
    /// Whether negative exponents on this generator are legal.
    pub invertible: bool,
}

/// An ordered table of generators defining a polynomial ring.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct GeneratorSet {
    gens: Vec<Generator>,
}

impl GeneratorSet {
    pub fn new() -> Self {
        GeneratorSet { gens: Vec::new() }
    }

    /// Start an extension of a frozen set; ids of existing generators keep
    /// their meaning in the extended set.
    pub fn extend(base: &Arc<GeneratorSet>) -> Self {
        (**base).clone()
    }

    /// Register a degree-1 series variable.
    pub fn series(&mut self, name: &str) -> SymbolId {
        self.push(Generator { name: name.to_string(), degree: 1, kind: SymbolKind::Series, invertible: false })
    }

    /// Register a degree-1 series variable on which negative exponents are
    /// allowed (the Laurent parameter `t` is the standard client).
    pub fn series_invertible(&mut self, name: &str) -> SymbolId {
        self.push(Generator { name: name.to_string(), degree: 1, kind: SymbolKind::Series, invertible: true })
    }

    /// Register a coefficient-ring generator of the given degree.
    pub fn coefficient(&mut self, name: &str, degree: i64) -> SymbolId {
        self.push(Generator { name: name.to_string(), degree, kind: SymbolKind::Coefficient, invertible: false })
    }

    /// Register an invertible coefficient generator (β, the localised
    /// integrity symbol, …).
    pub fn coefficient_invertible(&mut self, name: &str, degree: i64) -> SymbolId {
        self.push(Generator { name: name.to_string(), degree, kind: SymbolKind::Coefficient, invertible: true })
    }

    fn push(&mut self, g: Generator) -> SymbolId {
        if let Some(id) = self.id(&g.name) {
            let existing = &self.gens[id as usize];
            // Re-registering an identical generator is a no-op so helper code
            // can be idempotent; a conflicting registration is a programming
            // error rather than a recoverable condition.
            assert_eq!(existing, &g, "generator {} re-registered with different data", g.name);
            return id;
        }
        let id = self.gens.len() as SymbolId;
        self.gens.push(g);
        id
    }

    pub fn freeze(self) -> Arc<GeneratorSet> {
        Arc::new(self)
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<SymbolId> {
        self.gens.iter().position(|g| g.name == name).map(|i| i as SymbolId)
    }

    pub fn info(&self, id: SymbolId) -> &Generator {
        &self.gens[id as usize]
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.gens[id as usize].name
    }

    pub fn iter(&self) -> impl Iterator<Item = (SymbolId, &Generator)> {
        self.gens.iter().enumerate().map(|(i, g)| (i as SymbolId, g))
    }

    /// Whether `self` is a prefix extension of `other` (or equal).
    pub fn extends(&self, other: &GeneratorSet) -> bool {
        self.gens.len() >= other.gens.len() && self.gens[..other.gens.len()] == other.gens[..]
    }

    /// Pick the larger of two compatible generator sets.
    pub fn join(a: &Arc<GeneratorSet>, b: &Arc<GeneratorSet>) -> Result<Arc<GeneratorSet>, RingError> {
        if Arc::ptr_eq(a, b) || a.extends(b) {
            Ok(a.clone())
        } else if b.extends(a) {
            Ok(b.clone())
        } else {
            Err(RingError::GeneratorMismatch { left: a.describe(), right: b.describe() })
        }
    }

    fn describe(&self) -> String {
        let mut s = String::new();
        for (i, g) in self.gens.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&g.name);
        }
        s
    }
}
