//! Exact rational helpers on top of `BigRational`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

/// `2^-k`.
pub fn pow2_neg(k: u128) -> Q {
    let k = usize::try_from(k).expect("exponent too large to materialise");
    Q::new(BigInt::one(), BigInt::one() << k)
}

/// `a <= 2^-k` without materialising `2^k` when `k` is astronomically large.
pub fn le_pow2_neg(a: &Q, k: u128) -> bool {
    if !a.is_positive() {
        return true;
    }
    // a = n/d <= 2^-k  iff  n * 2^k <= d; n >= 1 so k > bits(d) fails
    let d_bits = a.denom().bits() as u128;
    if k > d_bits {
        return false;
    }
    let k = k as usize;
    (a.numer() << k) <= *a.denom()
}

/// `1/(n+3)^2`.
pub fn level_default(n: usize) -> Q {
    let m = BigInt::from(n + 3);
    Q::new(BigInt::one(), &m * &m)
}

pub fn is_unit_fraction(a: &Q) -> bool {
    a.numer().is_one() && a.denom().is_positive()
}

/// `s/(1-s)` with the convention `1 -> 0`.
pub fn odds_ratio(s: &Q) -> Q {
    let rest = Q::one() - s;
    if rest.is_zero() {
        Q::zero()
    } else {
        s / rest
    }
}

/// `"n/d"` in lowest terms; integers are still written with a denominator.
pub fn fmt_q(a: &Q) -> String {
    format!("{}/{}", a.numer(), a.denom())
}

pub fn parse_q(s: &str) -> Result<Q, Error> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Q::new(n, d))
}

/// Serde adapter writing rationals as `"n/d"` strings.
pub mod serde_q {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(a))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(serde::de::Error::custom)
    }
}
