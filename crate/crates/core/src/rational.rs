//! Exact rational magnitudes.
//!
//! Costs, values, budgets and payments are all [`Rational`]s. Textual form is
//! `"p/q"` or `"p"`, with the sign carried on the numerator only.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `num / den`; panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_u32(n: u32) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::ParseRational(s.to_string());
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (s, None),
    };
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    let num_digits = num.strip_prefix('-').unwrap_or(num);
    if !digits(num_digits) {
        return Err(bad());
    }
    let numer: BigInt = num.parse().map_err(|_| bad())?;
    let denom: BigInt = match den {
        Some(d) if digits(d) => d.parse().map_err(|_| bad())?,
        Some(_) => return Err(bad()),
        None => BigInt::one(),
    };
    if denom.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(numer, denom))
}

pub fn format_rational(q: &Rational) -> String {
    q.to_string()
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// `min(cap, floor(budget / cost))`, treating a zero cost as an unbounded floor.
pub fn affordable_units(budget: &Rational, cost: &Rational, cap: u32) -> u32 {
    if cost.is_zero() {
        return cap;
    }
    let q = (budget / cost).floor().to_integer();
    match q.to_u64() {
        Some(v) => v.min(cap as u64) as u32,
        None if q.is_negative() => 0,
        None => cap,
    }
}

/// Least common multiple of the denominators of `values`.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

/// Harmonic number `H_n` as an exact rational.
pub fn harmonic(n: u32) -> Rational {
    (1..=n).fold(Rational::zero(), |acc, k| acc + ratio(1, k as i64))
}
