//! Exact rational helpers on top of `num::BigRational`.

use num::bigint::BigInt;
use num::integer::Integer;
use num::traits::{One, Signed, ToPrimitive, Zero};
use num::BigRational;

use crate::{Error, Result};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"3"`, `"-3/4"` or a finite decimal such as `"0.25"`.
pub fn parse(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let neg = whole.starts_with('-');
        let whole_abs = whole.trim_start_matches(['-', '+']);
        let digits = format!("{}{}", if whole_abs.is_empty() { "0" } else { whole_abs }, frac);
        if frac.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num::pow(BigInt::from(10), frac.len());
        let v = Q::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(n))
}

/// `p/q`, or `p` for integers.
pub fn format(v: &Q) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

pub fn to_f64(v: &Q) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Naive height `max(|p|, |q|)`.
pub fn height(v: &Q) -> BigInt {
    v.numer().abs().max(v.denom().clone())
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a, I: IntoIterator<Item = &'a Q>>(vals: I) -> BigInt {
    vals.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

pub fn is_dyadic(v: &Q) -> bool {
    let d = v.denom();
    d.is_positive() && (d & (d - BigInt::one())).is_zero()
}

/// Serde adapter storing a rational as its `p/q` string.
pub mod as_string {
    use super::Q;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).map_err(serde::de::Error::custom)
    }
}
