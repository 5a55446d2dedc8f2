//! Randomized law sheet for the sparse polynomial ring.
//!
//! Three families of properties, each on freshly generated operands:
//!  - the commutative-ring axioms hold exactly when no truncation is in
//!    play, including on Laurent terms in the invertible parameter;
//!  - truncation coherence: truncating before or after a product makes no
//!    difference once every operand has non-negative series valuation, and
//!    the same holds with a coefficient-weight cap stacked on top;
//!  - substitution acts as a ring homomorphism up to the working budget.

use std::sync::Arc;

use cobord_core::{GeneratorSet, Monomial, SparsePoly, SymbolId, TruncationBudget};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

/// z, x series; t invertible series; b1, b2 coefficient generators.
fn test_ring() -> (Arc<GeneratorSet>, [SymbolId; 5]) {
    let mut g = GeneratorSet::new();
    let z = g.series("z");
    let x = g.series("x");
    let t = g.series_invertible("t");
    let b1 = g.coefficient("b1", -1);
    let b2 = g.coefficient("b2", -2);
    (g.freeze(), [z, x, t, b1, b2])
}

fn rational() -> impl Strategy<Value = BigRational> {
    (-9i64..=9, 1i64..=4)
        .prop_map(|(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
}

/// Exponent rows for [z, x, t, b1, b2]; `t_min` allows Laurent terms.
fn exponents(t_min: i32) -> impl Strategy<Value = [i32; 5]> {
    [0i32..=3, 0..=3, t_min..=3, 0..=2, 0..=2]
}

fn poly(t_min: i32) -> impl Strategy<Value = SparsePoly> {
    prop::collection::vec((exponents(t_min), rational()), 0..6).prop_map(|terms| {
        let (ring, ids) = test_ring();
        let mut p = SparsePoly::zero(&ring);
        for (exps, c) in terms {
            let pairs = ids.iter().copied().zip(exps).filter(|&(_, e)| e != 0);
            let m = Monomial::from_pairs(pairs).expect("exponents stay in range");
            p = p.add(&SparsePoly::term(&ring, m, c)).expect("same ring");
        }
        p
    })
}

/// Operands for the exact axioms: Laurent in t, no truncation anywhere.
fn laurent_poly() -> impl Strategy<Value = SparsePoly> {
    poly(-2)
}

/// Operands with non-negative series valuation, as truncation coherence
/// requires.
fn regular_poly() -> impl Strategy<Value = SparsePoly> {
    poly(0)
}

fn wide() -> TruncationBudget {
    TruncationBudget::unbounded()
}

proptest! {
    #[test]
    fn addition_commutes(a in laurent_poly(), b in laurent_poly()) {
        prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
    }

    #[test]
    fn addition_associates(a in laurent_poly(), b in laurent_poly(), c in laurent_poly()) {
        let left = a.add(&b).unwrap().add(&c).unwrap();
        let right = a.add(&b.add(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn zero_is_the_additive_identity(a in laurent_poly()) {
        let zero = SparsePoly::zero(a.ring());
        prop_assert_eq!(a.add(&zero).unwrap(), a);
    }

    #[test]
    fn negation_cancels(a in laurent_poly()) {
        prop_assert!(a.add(&a.neg()).unwrap().is_zero());
    }

    #[test]
    fn multiplication_commutes(a in laurent_poly(), b in laurent_poly()) {
        prop_assert_eq!(a.mul(&b, &wide()).unwrap(), b.mul(&a, &wide()).unwrap());
    }

    #[test]
    fn multiplication_associates(a in laurent_poly(), b in laurent_poly(), c in laurent_poly()) {
        let left = a.mul(&b, &wide()).unwrap().mul(&c, &wide()).unwrap();
        let right = a.mul(&b.mul(&c, &wide()).unwrap(), &wide()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn one_is_the_multiplicative_identity(a in laurent_poly()) {
        let one = SparsePoly::one(a.ring());
        prop_assert_eq!(a.mul(&one, &wide()).unwrap(), a);
    }

    #[test]
    fn multiplication_distributes_over_addition(
        a in laurent_poly(),
        b in laurent_poly(),
        c in laurent_poly(),
    ) {
        let left = a.mul(&b.add(&c).unwrap(), &wide()).unwrap();
        let right = a.mul(&b, &wide()).unwrap().add(&a.mul(&c, &wide()).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn scalar_multiplication_matches_constant_product(a in laurent_poly(), c in rational()) {
        let by_constant = a.mul(&SparsePoly::constant(a.ring(), c.clone()), &wide()).unwrap();
        prop_assert_eq!(a.scalar_mul(&c), by_constant);
    }

    #[test]
    fn powers_match_repeated_products(a in laurent_poly()) {
        let cubed = a.mul(&a, &wide()).unwrap().mul(&a, &wide()).unwrap();
        prop_assert_eq!(a.pow(3, &wide()).unwrap(), cubed);
    }
}

proptest! {
    #[test]
    fn truncation_is_idempotent(a in regular_poly(), cap in 0i64..=6) {
        let budget = TruncationBudget::series(cap);
        let once = a.truncate(&budget);
        prop_assert_eq!(once.truncate(&budget), once);
    }

    #[test]
    fn truncation_commutes_with_products(
        a in regular_poly(),
        b in regular_poly(),
        cap in 0i64..=6,
    ) {
        let budget = TruncationBudget::series(cap);
        let exact_then_cut = a.mul(&b, &wide()).unwrap().truncate(&budget);
        let cut_then_multiply =
            a.truncate(&budget).mul(&b.truncate(&budget), &budget).unwrap();
        prop_assert_eq!(&exact_then_cut, &cut_then_multiply);
        // Truncating only at the end of the budgeted product agrees too.
        prop_assert_eq!(a.mul(&b, &budget).unwrap(), exact_then_cut);
    }

    #[test]
    fn coefficient_caps_commute_with_products(
        a in regular_poly(),
        b in regular_poly(),
        cap in 0i64..=6,
        weight in 0i64..=3,
    ) {
        let budget = TruncationBudget::series(cap).with_coefficient_cap(weight);
        let exact_then_cut = a.mul(&b, &wide()).unwrap().truncate(&budget);
        let cut_then_multiply =
            a.truncate(&budget).mul(&b.truncate(&budget), &budget).unwrap();
        prop_assert_eq!(exact_then_cut, cut_then_multiply);
    }
}

proptest! {
    #[test]
    fn substitution_is_a_ring_homomorphism(
        a in regular_poly(),
        b in regular_poly(),
        s in regular_poly(),
        u in regular_poly(),
        cap in 0i64..=5,
    ) {
        let (_, [z, x, ..]) = test_ring();
        let budget = TruncationBudget::series(cap);
        let values = [(z, s), (x, u)];
        let of_product = a
            .mul(&b, &wide()).unwrap()
            .substitute(&values, &budget).unwrap();
        let product_of = a
            .substitute(&values, &budget).unwrap()
            .mul(&b.substitute(&values, &budget).unwrap(), &budget).unwrap();
        prop_assert_eq!(of_product, product_of);
    }

    #[test]
    fn substitution_is_additive(
        a in regular_poly(),
        b in regular_poly(),
        s in regular_poly(),
        cap in 0i64..=5,
    ) {
        let (_, [z, ..]) = test_ring();
        let budget = TruncationBudget::series(cap);
        let values = [(z, s)];
        let of_sum = a.add(&b).unwrap().substitute(&values, &budget).unwrap();
        let sum_of = a
            .substitute(&values, &budget).unwrap()
            .add(&b.substitute(&values, &budget).unwrap()).unwrap();
        prop_assert_eq!(of_sum, sum_of);
    }
}
