//! Finite binary strings: nodes of the full binary tree and label payloads.
//!
//! Ordering is dictionary order with 0 < 1 and a proper prefix sorting before
//! every one of its extensions. Every "leftmost" / "lexicographically least"
//! choice in the crate is resolved through this order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A finite word over {0,1}. The empty string is valid and is the tree root.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn empty() -> Self {
        BitString(Vec::new())
    }

    /// Builds from raw bits; panics on a value outside {0,1}.
    pub fn from_bits(bits: &[u8]) -> Self {
        assert!(bits.iter().all(|&b| b <= 1), "bit out of range");
        BitString(bits.to_vec())
    }

    /// The all-zeros string of the given length (the leftmost node per level).
    pub fn zeros(len: u64) -> Self {
        BitString(vec![0; len as usize])
    }

    pub fn len(&self) -> u64 {
        self.0.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: u64) -> u8 {
        self.0[i as usize]
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn push(&mut self, bit: u8) {
        assert!(bit <= 1, "bit out of range");
        self.0.push(bit);
    }

    /// The child σ∗b.
    pub fn child(&self, bit: u8) -> Self {
        let mut out = self.clone();
        out.push(bit);
        out
    }

    /// The initial segment of length `n` (σ↾n). Panics if `n` exceeds the length.
    pub fn prefix(&self, n: u64) -> Self {
        assert!(n <= self.len(), "prefix longer than string");
        BitString(self.0[..n as usize].to_vec())
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn is_proper_prefix_of(&self, other: &BitString) -> bool {
        other.0.len() > self.0.len() && self.is_prefix_of(other)
    }

    /// Extends to length `len` by appending copies of `bit`.
    pub fn padded(&self, len: u64, bit: u8) -> Self {
        assert!(len >= self.len());
        let mut out = self.clone();
        while out.len() < len {
            out.push(bit);
        }
        out
    }

    /// Concatenation σ·τ.
    pub fn concat(&self, other: &BitString) -> Self {
        let mut out = self.clone();
        out.0.extend_from_slice(&other.0);
        out
    }

    /// All extensions of `self` of length `len`, in lexicographic order.
    /// Intended for small gaps only; the caller keeps `len - |self|` modest.
    pub fn extensions(&self, len: u64) -> impl Iterator<Item = BitString> + '_ {
        let gap = (len - self.len()) as u32;
        (0u64..(1u64 << gap)).map(move |v| {
            let mut out = self.clone();
            for i in (0..gap).rev() {
                out.push(((v >> i) & 1) as u8);
            }
            out
        })
    }
}

/// Total order used for every "least"/"leftmost" selection: 0 < 1, prefix < extension.
pub fn lex_compare(a: &BitString, b: &BitString) -> std::cmp::Ordering {
    a.cmp(b)
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid bit string {0:?}: only characters 0 and 1 are allowed")]
pub struct ParseBitStringError(pub String);

impl FromStr for BitString {
    type Err = ParseBitStringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(0),
                '1' => bits.push(1),
                _ => return Err(ParseBitStringError(s.to_string())),
            }
        }
        Ok(BitString(bits))
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cmp::Ordering;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn lex_compare_first_differing_bit() {
        assert_eq!(lex_compare(&bs("0000"), &bs("0001")), Ordering::Less);
    }

    #[test]
    fn lex_compare_identity() {
        assert_eq!(lex_compare(&bs("0011"), &bs("0011")), Ordering::Equal);
    }

    #[test]
    fn lex_compare_prefix_precedes_extension() {
        assert_eq!(lex_compare(&bs("00"), &bs("0001")), Ordering::Less);
    }

    #[test]
    fn prefix_and_padding() {
        assert_eq!(bs("0011").prefix(2), bs("00"));
        assert_eq!(bs("00").padded(4, 1), bs("0011"));
        assert_eq!(bs("00").padded(4, 0), bs("0000"));
        assert_eq!(BitString::empty().prefix(0), BitString::empty());
    }

    #[test]
    fn extensions_enumerate_in_lex_order() {
        let got: Vec<String> = bs("01").extensions(4).map(|b| b.to_string()).collect();
        assert_eq!(got, vec!["0100", "0101", "0110", "0111"]);
        let singleton: Vec<BitString> = bs("01").extensions(2).collect();
        assert_eq!(singleton, vec![bs("01")]);
    }

    #[test]
    fn parse_rejects_foreign_characters() {
        assert!("01a".parse::<BitString>().is_err());
        assert_eq!("".parse::<BitString>().unwrap(), BitString::empty());
    }

    #[test]
    fn prefix_relation() {
        assert!(bs("00").is_prefix_of(&bs("0010")));
        assert!(bs("00").is_prefix_of(&bs("00")));
        assert!(!bs("00").is_proper_prefix_of(&bs("00")));
        assert!(!bs("01").is_prefix_of(&bs("0010")));
        assert!(BitString::empty().is_prefix_of(&bs("1")));
    }
}
