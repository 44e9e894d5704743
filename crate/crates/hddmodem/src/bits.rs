//! Bit sequences as they appear on the air interface.
//!
//! A [`BitString`] is an explicit-length sequence of binary symbols. Length
//! is always preserved: padding or truncation only ever happens through the
//! named operations that do it.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// Ordered sequence of binary symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new() -> Self {
        BitString(Vec::new())
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    /// All-zero bitstring of the given length.
    pub fn zeros(len: usize) -> Self {
        BitString(vec![false; len])
    }

    /// Uniformly random bits drawn from `rng`.
    pub fn random<R: Rng>(rng: &mut R, len: usize) -> Self {
        BitString((0..len).map(|_| rng.gen::<bool>()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn extend(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0);
    }

    /// First `len` bits (drops right-padding added by frame encoding).
    pub fn truncated(&self, len: usize) -> BitString {
        BitString(self.0[..len.min(self.0.len())].to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Number of positions at which `self` and `other` differ, over the
    /// common prefix.
    pub fn hamming_prefix(&self, other: &BitString) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .filter(|(a, b)| a != b)
            .count()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl serde::Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => return Err(Error::InvalidBitChar(other)),
            }
        }
        Ok(BitString(bits))
    }
}

impl From<&str> for BitString {
    /// Panics on non-binary characters; intended for literals in tests and
    /// fixtures. Use `FromStr` for untrusted input.
    fn from(s: &str) -> Self {
        s.parse().expect("bit literal must contain only 0/1")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_round_trip() {
        let b: BitString = "0101110101".parse().unwrap();
        assert_eq!(b.len(), 10);
        assert_eq!(b.to_string(), "0101110101");
    }

    #[test]
    fn rejects_non_binary() {
        let e = "01x1".parse::<BitString>().unwrap_err();
        assert!(matches!(e, Error::InvalidBitChar('x')));
    }

    #[test]
    fn truncation_keeps_prefix() {
        let b = BitString::from("110010");
        assert_eq!(b.truncated(4).to_string(), "1100");
        assert_eq!(b.truncated(99).to_string(), "110010");
    }

    #[test]
    fn empty_is_explicit() {
        let b = BitString::new();
        assert!(b.is_empty());
        assert_eq!(b.to_string(), "");
    }
}
