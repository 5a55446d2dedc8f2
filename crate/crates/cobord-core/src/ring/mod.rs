//! Sparse multivariate polynomial arithmetic over graded generator sets.
//!
//! The ground coefficients are exact rationals ([`num_rational::BigRational`]),
//! monomials may carry negative exponents on generators declared invertible,
//! and every arithmetic entry point threads a [`TruncationBudget`] so that
//! series computations stay finite.  Submodules:
//!
//! * [`symbols`] — named generators, their grading and the shared
//!   [`GeneratorSet`] table.
//! * [`monomial`] — exponent vectors with overflow-checked multiplication.
//! * [`poly`] — [`SparsePoly`] arithmetic, substitution and exact division.
//! * [`budget`] — the degree/floor truncation discipline.

pub mod budget;
pub mod monomial;
pub mod poly;
pub mod symbols;

pub use budget::TruncationBudget;
pub use monomial::Monomial;
pub use poly::SparsePoly;
pub use symbols::{Generator, GeneratorSet, SymbolId, SymbolKind};

use alloc::string::String;

/// Errors produced by ring-level arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RingError {
    /// Two polynomials live over generator sets that are not related by
    /// extension, so there is no common ring to compute in.
    GeneratorMismatch { left: String, right: String },
    /// A symbol id or name is not registered in the generator set at hand.
    UnknownSymbol(String),
    /// A monomial carries a negative exponent on a generator that was not
    /// declared invertible.
    NegativeExponent { symbol: String },
    /// Exponent arithmetic left the `i32` range.
    ExponentOverflow,
    /// `exact_divide_integer` would have introduced a denominator prime that
    /// the dividend did not already carry.
    NonIntegralDivision { coefficient: String, divisor: String },
    /// Division by the integer zero.
    DivisionByZero,
    /// A series inverse was requested for an element with no invertible
    /// pivot term (e.g. its lowest part is a non-invertible variable).
    NonInvertible { detail: String },
    /// A series with nonzero constant term was substituted into a variable
    /// occurring with negative exponent.
    SubstituteIntoNegative { symbol: String },
    /// Exact monomial division failed: some term was not divisible.
    NotDivisible { monomial: String },
}

impl core::fmt::Display for RingError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            RingError::GeneratorMismatch { left, right } => {
                write!(f, "generator-set mismatch: {left} vs {right}")
            }
            RingError::UnknownSymbol(name) => write!(f, "unknown symbol: {name}"),
            RingError::NegativeExponent { symbol } => {
                write!(f, "negative exponent on non-invertible generator {symbol}")
            }
            RingError::ExponentOverflow => write!(f, "monomial exponent overflow"),
            RingError::NonIntegralDivision { coefficient, divisor } => {
                write!(f, "coefficient {coefficient} is not exactly divisible by {divisor}")
            }
            RingError::DivisionByZero => write!(f, "division by zero"),
            RingError::NonInvertible { detail } => write!(f, "series is not invertible: {detail}"),
            RingError::SubstituteIntoNegative { symbol } => write!(
                f,
                "cannot substitute a series with nonzero constant term into {symbol}, which occurs with negative exponent"
            ),
            RingError::NotDivisible { monomial } => {
                write!(f, "term {monomial} is not divisible by the requested monomial")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for RingError {}
