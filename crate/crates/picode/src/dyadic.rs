//! Exact non-negative dyadic rationals.
//!
//! Every measure and weight in the crate is a sum of powers of two, and the
//! construction's room-to-breathe bound is a strict inequality, so values are
//! kept as `numerator / 2^exponent` with unbounded integer numerators. There
//! is no floating-point path anywhere.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign};

use num_bigint::BigUint;

use crate::bits::BitString;

/// A value `numerator / 2^exponent` with numerator ≥ 0.
///
/// Canonical form: the numerator is odd or zero, and a zero numerator forces a
/// zero exponent. Comparisons and sums are exact.
#[derive(Clone, PartialEq, Eq)]
pub struct Dyadic {
    numerator: BigUint,
    exponent: u64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { numerator: BigUint::from(0u32), exponent: 0 }
    }

    pub fn one() -> Self {
        Dyadic { numerator: BigUint::from(1u32), exponent: 0 }
    }

    pub fn new(numerator: BigUint, exponent: u64) -> Self {
        let mut d = Dyadic { numerator, exponent };
        d.normalize();
        d
    }

    pub fn from_ratio(numerator: u64, exponent: u64) -> Self {
        Self::new(BigUint::from(numerator), exponent)
    }

    /// 2^k for any integer k (negative exponents give fractions).
    pub fn pow2(k: i64) -> Self {
        if k >= 0 {
            Dyadic { numerator: BigUint::from(1u32) << (k as u64), exponent: 0 }
        } else {
            Dyadic { numerator: BigUint::from(1u32), exponent: (-k) as u64 }
        }
    }

    /// The measure 2^{-|σ|} of the cylinder ⟦σ⟧.
    pub fn cylinder(s: &BitString) -> Self {
        Self::pow2(-(s.len() as i64))
    }

    pub fn is_zero(&self) -> bool {
        self.numerator == BigUint::from(0u32)
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    fn normalize(&mut self) {
        if self.is_zero() {
            self.exponent = 0;
            return;
        }
        let shift = self.numerator.trailing_zeros().unwrap_or(0).min(self.exponent);
        if shift > 0 {
            self.numerator >>= shift;
            self.exponent -= shift;
        }
    }

    /// Exact difference, or `None` when the result would go negative.
    pub fn checked_sub(&self, other: &Dyadic) -> Option<Dyadic> {
        let e = self.exponent.max(other.exponent);
        let a = &self.numerator << (e - self.exponent);
        let b = &other.numerator << (e - other.exponent);
        if a < b {
            None
        } else {
            Some(Dyadic::new(a - b, e))
        }
    }

    /// Halve the value (divide by 2^k).
    pub fn shr(&self, k: u64) -> Dyadic {
        Dyadic::new(self.numerator.clone(), self.exponent + k)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let e = self.exponent.max(rhs.exponent);
        let a = &self.numerator << (e - self.exponent);
        let b = &rhs.numerator << (e - rhs.exponent);
        Dyadic::new(a + b, e)
    }
}

impl AddAssign<&Dyadic> for Dyadic {
    fn add_assign(&mut self, rhs: &Dyadic) {
        *self = &*self + rhs;
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exponent.max(other.exponent);
        let a = &self.numerator << (e - self.exponent);
        let b = &other.numerator << (e - other.exponent);
        a.cmp(&b)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/2^{}", self.numerator, self.exponent)
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Exact Lebesgue measure μ(⟦S⟧) of a finite union of cylinders, overlaps
/// counted once.
pub fn measure_of<'a, I>(strings: I) -> Dyadic
where
    I: IntoIterator<Item = &'a BitString>,
{
    let antichain = minimal_antichain(strings);
    let mut total = Dyadic::zero();
    for s in &antichain {
        total += &Dyadic::cylinder(s);
    }
    total
}

/// The minimal elements of a string set under the prefix order: the unique
/// prefix-free set covering the same cylinders.
pub fn minimal_antichain<'a, I>(strings: I) -> Vec<BitString>
where
    I: IntoIterator<Item = &'a BitString>,
{
    let mut sorted: Vec<&BitString> = strings.into_iter().collect();
    sorted.sort();
    sorted.dedup();
    let mut kept: Vec<BitString> = Vec::new();
    for s in sorted {
        // In sorted order it suffices to test the most recent survivor: any
        // earlier prefix of s would also be a prefix of that survivor.
        match kept.last() {
            Some(prev) if prev.is_prefix_of(s) => {}
            _ => kept.push(s.clone()),
        }
    }
    kept
}

/// Weight Σ 2^{-|η|} of a set of strings, each counted once.
pub fn weight_of<'a, I>(strings: I) -> Dyadic
where
    I: IntoIterator<Item = &'a BitString>,
{
    let mut seen: Vec<&BitString> = strings.into_iter().collect();
    seen.sort();
    seen.dedup();
    let mut total = Dyadic::zero();
    for s in seen {
        total += &Dyadic::cylinder(s);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn measure_of_empty_set_is_zero() {
        assert_eq!(measure_of([].iter()), Dyadic::zero());
    }

    #[test]
    fn measure_of_nested_cylinders_counts_once() {
        let set = [bs("00"), bs("0000")];
        assert_eq!(measure_of(set.iter()), Dyadic::from_ratio(1, 2));
    }

    #[test]
    fn measure_of_disjoint_union() {
        // Expected value from brute force over all depth-2 extensions:
        // covered ∈ {00,01,10} out of 4.
        let set = [bs("0"), bs("10")];
        assert_eq!(measure_of(set.iter()), Dyadic::from_ratio(3, 2));
        assert_eq!(brute_force_measure(&set, 2), Dyadic::from_ratio(3, 2));
    }

    /// Brute-force oracle: fraction of depth-d strings with a prefix in the set.
    fn brute_force_measure(set: &[BitString], depth: u64) -> Dyadic {
        let mut covered = 0u64;
        for z in BitString::empty().extensions(depth) {
            if set.iter().any(|q| q.is_prefix_of(&z)) {
                covered += 1;
            }
        }
        Dyadic::from_ratio(covered, depth)
    }

    #[test]
    fn measure_matches_brute_force_exhaustively_small() {
        // All subsets of strings of length ≤ 3 would be 2^14 cases; sample the
        // full power set over a fixed 4-element universe instead.
        let universe = [bs("0"), bs("01"), bs("110"), bs("111")];
        for mask in 0u32..16 {
            let set: Vec<BitString> = universe
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, s)| s.clone())
                .collect();
            assert_eq!(measure_of(set.iter()), brute_force_measure(&set, 3), "mask {mask}");
        }
    }

    #[test]
    fn strict_comparisons_are_exact() {
        let half = Dyadic::from_ratio(1, 1);
        let almost = Dyadic::new(BigUint::from((1u64 << 60) - 1), 61);
        assert!(almost < half);
        assert_eq!(&almost + &Dyadic::pow2(-61), half);
        assert!(half < &half + &Dyadic::pow2(-61));
    }

    #[test]
    fn pow2_positive_and_negative() {
        assert_eq!(Dyadic::pow2(3), Dyadic::from_ratio(8, 0));
        assert_eq!(Dyadic::pow2(-3), Dyadic::from_ratio(1, 3));
        assert_eq!(Dyadic::pow2(0), Dyadic::one());
    }

    proptest! {
        #[test]
        fn add_sub_roundtrip(an in 0u64..1 << 20, ae in 0u64..40, bn in 0u64..1 << 20, be in 0u64..40) {
            let a = Dyadic::from_ratio(an, ae);
            let b = Dyadic::from_ratio(bn, be);
            let sum = &a + &b;
            prop_assert_eq!(sum.checked_sub(&b).unwrap(), a);
        }

        #[test]
        fn comparison_agrees_with_cross_multiplication(an in 0u64..1 << 20, ae in 0u64..40, bn in 0u64..1 << 20, be in 0u64..40) {
            let a = Dyadic::from_ratio(an, ae);
            let b = Dyadic::from_ratio(bn, be);
            // a/2^ae vs b/2^be  ⟺  a·2^be vs b·2^ae
            let lhs = BigUint::from(an) << be;
            let rhs = BigUint::from(bn) << ae;
            prop_assert_eq!(a.cmp(&b), lhs.cmp(&rhs));
        }

        #[test]
        fn measure_is_monotone_under_inclusion(bits in proptest::collection::vec("[01]{1,8}", 0..12), extra in "[01]{1,8}") {
            let smaller: Vec<BitString> = bits.iter().map(|s| s.parse().unwrap()).collect();
            let mut larger = smaller.clone();
            larger.push(extra.parse().unwrap());
            prop_assert!(measure_of(smaller.iter()) <= measure_of(larger.iter()));
            prop_assert!(measure_of(larger.iter()) <= Dyadic::one());
        }
    }
}
