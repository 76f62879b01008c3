//! Finite binary strings, their integer codes, and the pairing codecs.
//!
//! Positions inside a string are 1-based: `x = x_1 x_2 ... x_l`.
//! Strings are packed into a `u128`, so lengths are capped at [`MAX_LEN`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Longest representable string. `index_of` of a length-127 string still fits in `u128`.
pub const MAX_LEN: usize = 127;

/// A finite binary string, the vertex type of the binary tree.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    len: u8,
    bits: u128,
}

/// Integer code of a string: `2^l - 1 + value`.
pub type CodeIndex = u128;

impl BitString {
    pub const EMPTY: BitString = BitString { len: 0, bits: 0 };

    pub fn from_value(len: usize, value: u128) -> BitString {
        assert!(len <= MAX_LEN, "string length {len} exceeds {MAX_LEN}");
        let mask = if len == 0 { 0 } else { u128::MAX >> (128 - len) };
        BitString {
            len: len as u8,
            bits: value & mask,
        }
    }

    pub fn zeros(len: usize) -> BitString {
        BitString::from_value(len, 0)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Numeric value of the bits read as a big-endian binary number.
    pub fn value(&self) -> u128 {
        self.bits
    }

    /// Bit at 1-based position `t`.
    pub fn bit(&self, t: usize) -> u8 {
        assert!(t >= 1 && t <= self.len(), "position {t} out of range 1..={}", self.len);
        ((self.bits >> (self.len() - t)) & 1) as u8
    }

    pub fn push(&self, b: u8) -> BitString {
        assert!(self.len() < MAX_LEN);
        BitString {
            len: self.len + 1,
            bits: (self.bits << 1) | (b & 1) as u128,
        }
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        assert!(self.len() + other.len() <= MAX_LEN);
        if other.len == 0 {
            return *self;
        }
        BitString {
            len: self.len + other.len,
            bits: (self.bits << other.len) | other.bits,
        }
    }

    /// The length-`n` prefix `x^n` (the whole string when `n >= l(x)`).
    pub fn prefix(&self, n: usize) -> BitString {
        let n = n.min(self.len());
        BitString {
            len: n as u8,
            bits: self.bits >> (self.len() - n),
        }
    }

    /// Bits at positions `from..=to` (1-based). Empty when `from > to`.
    pub fn segment(&self, from: usize, to: usize) -> BitString {
        if from > to {
            return BitString::EMPTY;
        }
        assert!(from >= 1 && to <= self.len());
        let shifted = self.bits >> (self.len() - to);
        BitString::from_value(to - from + 1, shifted)
    }

    /// Replace the first `prefix.len()` bits with `prefix`.
    pub fn with_prefix(&self, prefix: &BitString) -> BitString {
        assert!(prefix.len() <= self.len());
        let rest = self.len() - prefix.len();
        let low_mask = if rest == 0 { 0 } else { u128::MAX >> (128 - rest) };
        BitString {
            len: self.len,
            bits: (prefix.bits << rest) | (self.bits & low_mask),
        }
    }

    /// `self ⊆ other`: `other` extends `self`.
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.len <= other.len && other.prefix(self.len()).bits == self.bits
    }

    /// `self ⊂ other`: proper prefix.
    pub fn is_proper_prefix_of(&self, other: &BitString) -> bool {
        self.len < other.len && self.is_prefix_of(other)
    }

    pub fn comparable(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones() as usize
    }

    /// All prefixes from λ up to and including `self`.
    pub fn prefixes(&self) -> impl Iterator<Item = BitString> + '_ {
        (0..=self.len()).map(move |n| self.prefix(n))
    }
}

impl Ord for BitString {
    /// The natural order of the integer codes: shorter first, then by value.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then(self.bits.cmp(&other.bits))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len == 0 {
            return f.write_str("λ");
        }
        for t in 1..=self.len() {
            f.write_str(if self.bit(t) == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "λ" || s.is_empty() {
            return Ok(BitString::EMPTY);
        }
        if s.len() > MAX_LEN {
            return Err(Error::Parse(format!("bit string longer than {MAX_LEN}: {s}")));
        }
        let mut out = BitString::EMPTY;
        for c in s.chars() {
            out = match c {
                '0' => out.push(0),
                '1' => out.push(1),
                _ => return Err(Error::Parse(format!("not a bit string: {s:?}"))),
            };
        }
        Ok(out)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        // λ is written as the empty string on disk
        if self.is_empty() {
            s.serialize_str("")
        } else {
            s.collect_str(self)
        }
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `index_of(x) = 2^l(x) - 1 + value(x)`.
pub fn index_of(x: &BitString) -> CodeIndex {
    ((1u128 << x.len()) - 1) + x.value()
}

/// Inverse of [`index_of`], total on all codes that fit a [`MAX_LEN`] string.
pub fn string_of(code: CodeIndex) -> BitString {
    // length l satisfies 2^l - 1 <= code < 2^(l+1) - 1
    let l = (127 - (code + 1).leading_zeros()) as usize;
    BitString::from_value(l, code + 1 - (1u128 << l))
}

/// Diagonal pairing of positive integers: `<i,j> = (i+j-2)(i+j-1)/2 + i`.
pub fn pair(i: u64, j: u64) -> Result<u64, Error> {
    if i < 1 || j < 1 {
        return Err(Error::Domain(format!("pair({i},{j}) needs arguments >= 1")));
    }
    let d = i + j - 1;
    Ok((d - 1) * d / 2 + i)
}

/// Inverse of [`pair`]: returns `(i, j)`.
pub fn unpair(n: u64) -> (u64, u64) {
    assert!(n >= 1, "pair codes start at 1");
    // largest d with (d-1)d/2 < n
    let mut d = (((8.0 * n as f64).sqrt() + 1.0) / 2.0) as u64;
    while d > 1 && (d - 1) * d / 2 >= n {
        d -= 1;
    }
    while d * (d + 1) / 2 < n {
        d += 1;
    }
    let i = n - (d - 1) * d / 2;
    (i, d + 1 - i)
}

pub fn unpair_1(n: u64) -> u64 {
    unpair(n).0
}

pub fn unpair_2(n: u64) -> u64 {
    unpair(n).1
}

/// `<i,j,k> = <<i,j>,k>`.
pub fn triple(i: u64, j: u64, k: u64) -> Result<u64, Error> {
    pair(pair(i, j)?, k)
}

pub fn untriple(n: u64) -> (u64, u64, u64) {
    let (a, k) = unpair(n);
    let (i, j) = unpair(a);
    (i, j, k)
}

/// The `n`-th triple (1-based) whose first two components differ, scanning triple codes upward.
pub fn restricted_triple_enumerate(n: u64) -> Result<(u64, u64, u64), Error> {
    if n < 1 {
        return Err(Error::Domain("restricted triple positions start at 1".into()));
    }
    let mut seen = 0;
    let mut code = 0;
    loop {
        code += 1;
        let t = untriple(code);
        if t.0 != t.1 {
            seen += 1;
            if seen == n {
                return Ok(t);
            }
        }
    }
}

/// Position of `(a, b, c)` in [`restricted_triple_enumerate`]; `a != b` required.
pub fn restricted_triple_position(a: u64, b: u64, c: u64) -> Result<u64, Error> {
    if a == b {
        return Err(Error::Domain(format!("triple ({a},{b},{c}) has equal first components")));
    }
    let code = triple(a, b, c)?;
    Ok((1..=code)
        .filter(|&t| {
            let (x, y, _) = untriple(t);
            x != y
        })
        .count() as u64)
}

/// `x ∼_w y`: equal length and equal bits at every position `t` with `w <= t <= l(x)`.
pub fn equiv_w(x: &BitString, y: &BitString, w: usize) -> bool {
    if x.len() != y.len() {
        return false;
    }
    let from = w.max(1);
    from > x.len() || x.segment(from, x.len()) == y.segment(from, y.len())
}

/// Canonical key of a `∼_w` class of strings of one length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SuffixClassKey {
    pub w: usize,
    pub anchor_length: usize,
    pub suffix: BitString,
}

impl SuffixClassKey {
    pub fn of(x: &BitString, w: usize) -> SuffixClassKey {
        let from = w.max(1);
        SuffixClassKey {
            w,
            anchor_length: x.len(),
            suffix: x.segment(from, x.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn index_examples() {
        assert_eq!(index_of(&BitString::EMPTY), 0);
        assert_eq!(index_of(&bs("00")), 3);
        assert_eq!(index_of(&bs("10")), 5);
        assert_eq!(index_of(&bs("11")), 6);
    }

    #[test]
    fn index_matches_length_then_value_enumeration() {
        // enumerate strings of length <= 3 in (length, numeric) order
        let mut code = 0u128;
        for len in 0..=3usize {
            for v in 0..(1u128 << len) {
                let x = BitString::from_value(len, v);
                assert_eq!(index_of(&x), code);
                assert_eq!(string_of(code), x);
                code += 1;
            }
        }
    }

    #[test]
    fn pair_examples() {
        assert_eq!(pair(1, 1).unwrap(), 1);
        assert_eq!(pair(2, 1).unwrap(), 3);
        assert_eq!(unpair_1(3), 2);
        assert!(pair(0, 1).is_err());
        assert!(pair(1, 0).is_err());
    }

    #[test]
    fn pair_matches_diagonal_scan() {
        let mut code = 0;
        for d in 2..60u64 {
            for i in 1..d {
                code += 1;
                assert_eq!(pair(i, d - i).unwrap(), code);
                assert_eq!(unpair(code), (i, d - i));
            }
        }
    }

    #[test]
    fn triple_examples() {
        assert_eq!(triple(1, 1, 1).unwrap(), 1);
        assert_eq!(untriple(triple(2, 3, 4).unwrap()).2, 4);
        assert_eq!(triple(1, 2, 1).unwrap(), pair(2, 1).unwrap());
        assert_eq!(triple(1, 2, 1).unwrap(), 3);
    }

    #[test]
    fn restricted_triples() {
        // brute-force scan: codes 1 = (1,1,1), 2 = (1,1,2), 3 = (1,2,1)
        assert_eq!(restricted_triple_enumerate(1).unwrap(), (1, 2, 1));
        for n in 1..300 {
            let (a, b, c) = restricted_triple_enumerate(n).unwrap();
            assert_ne!(a, b);
            assert_eq!(restricted_triple_position(a, b, c).unwrap(), n);
        }
    }

    #[test]
    fn equiv_examples() {
        assert!(equiv_w(&bs("0101"), &bs("1101"), 2));
        assert!(!equiv_w(&bs("0101"), &bs("0011"), 2));
        assert!(equiv_w(&bs("0101"), &bs("0101"), 0));
        assert!(!equiv_w(&bs("01"), &bs("011"), 5));
        assert_eq!(
            SuffixClassKey::of(&bs("0101"), 2),
            SuffixClassKey::of(&bs("1101"), 2)
        );
    }

    #[test]
    fn prefix_and_segment() {
        let x = bs("01101");
        assert_eq!(x.prefix(3), bs("011"));
        assert_eq!(x.prefix(9), x);
        assert_eq!(x.segment(2, 4), bs("110"));
        assert_eq!(x.segment(4, 3), BitString::EMPTY);
        assert!(bs("01").is_prefix_of(&x));
        assert!(!bs("00").is_prefix_of(&x));
        assert!(BitString::EMPTY.is_prefix_of(&x));
        assert_eq!(x.with_prefix(&bs("10")), bs("10101"));
        assert_eq!(bs("λ"), BitString::EMPTY);
        assert_eq!(x.to_string(), "01101");
    }
}
