//! Number types the oracle can run on: `f64` for speed, and exact
//! rationals where an identity must hold with zero tolerance.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};

use crate::error::{Error, Result};

pub trait Scalar: Num + Signed + PartialOrd + Clone + Debug + Send + Sync {
    /// True when arithmetic is exact (no rounding).
    const EXACT: bool;
    /// Largest ring the dense oracle accepts by default for this type.
    const DEFAULT_SITE_CAP: usize;

    fn to_f64(&self) -> f64;

    fn from_usize(v: usize) -> Self;
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const DEFAULT_SITE_CAP: usize = 12;

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_usize(v: usize) -> Self {
        v as f64
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    const DEFAULT_SITE_CAP: usize = 8;

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_usize(v: usize) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
}

/// Parses `"a/b"`, an integer, or a plain decimal such as `"0.35"` into an
/// exact rational. Decimals are read digit for digit, so `"0.1"` is `1/10`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::InvalidParams(format!("cannot read {text:?} as a rational number"));
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den == BigInt::from(0) {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = BigRational::new(num, den);
    Ok(if negative { -value } else { value })
}

/// Nearest `f64` to a rational (for reporting only).
pub fn rational_to_f64(value: &BigRational) -> f64 {
    Scalar::to_f64(value)
}
