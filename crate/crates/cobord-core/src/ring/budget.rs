//! Truncation budgets.
//!
//! Every series computation happens modulo a budget: terms whose signed
//! series degree exceeds the cap are dropped, as are terms below the Laurent
//! floor of the distinguished parameter and (optionally) terms whose
//! coefficient part is heavier than the coefficient cap.  Truncation is a
//! ring congruence on the sub-ring of non-negative series valuation, which
//! is what makes "compute truncated, compare truncated" sound.

use super::monomial::Monomial;
use super::symbols::{GeneratorSet, SymbolId};

/// Degree/floor limits threaded through all series arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncationBudget {
    /// Maximum signed total degree over series variables.
    pub series_cap: i64,
    /// Optional maximum weight of the coefficient part of a term.
    pub coefficient_cap: Option<i64>,
    /// Optional Laurent floor: `(symbol, k)` drops terms where `symbol`
    /// appears with exponent below `-k`.
    pub laurent_floor: Option<(SymbolId, i64)>,
}

impl TruncationBudget {
    /// Budget with the given series cap and no other limits.
    pub fn series(cap: i64) -> Self {
        TruncationBudget { series_cap: cap, coefficient_cap: None, laurent_floor: None }
    }

    /// Effectively no truncation — for genuinely polynomial computations.
    pub fn unbounded() -> Self {
        TruncationBudget::series(i64::MAX / 8)
    }

    pub fn with_floor(mut self, symbol: SymbolId, k: i64) -> Self {
        self.laurent_floor = Some((symbol, k));
        self
    }

    pub fn with_coefficient_cap(mut self, cap: i64) -> Self {
        self.coefficient_cap = Some(cap);
        self
    }

    /// Whether a monomial survives this budget.
    pub fn keeps(&self, m: &Monomial, ring: &GeneratorSet) -> bool {
        if m.series_degree(ring) > self.series_cap {
            return false;
        }
        if let Some(cap) = self.coefficient_cap {
            if m.coefficient_weight(ring) > cap {
                return false;
            }
        }
        if let Some((t, k)) = self.laurent_floor {
            if (m.exp(t) as i64) < -k {
                return false;
            }
        }
        true
    }

    /// A copy with the Laurent floor deepened to at least `k` (used
    /// internally to guard residue computations against edge loss).
    pub fn deepen_floor(&self, symbol: SymbolId, k: i64) -> Self {
        let mut b = self.clone();
        let cur = match b.laurent_floor {
            Some((s, existing)) if s == symbol => existing,
            _ => 0,
        };
        b.laurent_floor = Some((symbol, cur.max(k)));
        b
    }
}
