//! Exact computer-algebra kernel for operations on one-dimensional formal
//! group laws over graded coefficient rings.
//!
//! Everything here is computed with exact rational arithmetic over sparse
//! multivariate polynomials; there is no floating point anywhere and every
//! routine is deterministic.  The crate is `no_std` + `alloc` so the kernel
//! can be embedded; IO, file formats and the command-line surface live in
//! the companion crate.
//!
//! Module map:
//!
//! * [`ring`] — sparse polynomials over graded generator sets, truncation
//!   budgets, substitution, exact integer division.
//! * [`fgl`] — formal group laws (universal, additive, multiplicative),
//!   series reversion, n-series, invariant differentials, Laurent series
//!   and residues.
//! * [`taylor`] — discrete derivatives of maps between additive value
//!   spaces, the finite Taylor expansion and its chain rule.
//! * [`projops`] — filtered series transformations, their axiom checker,
//!   derived multi-slot transformations and the residue push-forward rule.
//! * [`snc`] — combinatorial models of strict normal-crossing divisors:
//!   splitting series, pull-backs, excess intersection and the extension
//!   of a transformation to divisor classes.
//! * [`symop`] — the total power-twisted multiplicative operation, the
//!   formal `[p]`-series and the non-additive symmetric operation obtained
//!   by exact division.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod fgl;
pub mod projops;
pub mod ring;
pub mod snc;
pub mod symop;
pub mod taylor;

pub use ring::{GeneratorSet, Monomial, RingError, SparsePoly, SymbolId, SymbolKind, TruncationBudget};
