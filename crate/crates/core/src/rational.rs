//! Exact rational helpers shared by every module.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NumberError {
    #[error("malformed number `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("probability {0} outside [0,1]")]
    OutOfRange(String),
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"3/5"`, `"0.6"`, `"1"` or `".5"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, NumberError> {
    let t = text.trim();
    let bad = || NumberError::Malformed(t.to_string());
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(NumberError::ZeroDenominator(t.to_string()));
        }
        return Ok(Rational::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = Rational::new(num, den);
    Ok(if neg { -r } else { r })
}

/// Like [`parse_rational`] but rejects values outside `[0, 1]`.
pub fn parse_probability(text: &str) -> Result<Rational, NumberError> {
    let r = parse_rational(text)?;
    if r.is_negative() || r > Rational::one() {
        return Err(NumberError::OutOfRange(text.trim().to_string()));
    }
    Ok(r)
}

/// `num/den` form; integers print without a denominator.
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Always `num/den`, as used in JSON output.
pub fn fmt_fraction(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Exact decimal (`0.75`) when the denominator divides a power of ten,
/// otherwise `num/den`.
pub fn fmt_decimal(r: &Rational) -> String {
    let mut den = r.denom().clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return fmt_fraction(r);
    }
    let digits = twos.max(fives);
    if digits == 0 {
        return r.numer().to_string();
    }
    let scaled =
        (r * Rational::from_integer(num_traits::pow(BigInt::from(10), digits))).to_integer();
    let sign = if scaled.is_negative() { "-" } else { "" };
    let text = format!("{:0>width$}", scaled.abs().to_string(), width = digits + 1);
    let (whole, frac) = text.split_at(text.len() - digits);
    format!("{sign}{whole}.{frac}")
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn is_probability(r: &Rational) -> bool {
    !r.is_negative() && *r <= Rational::one()
}

/// Serde helper: a rational as its `num/den` string.
pub fn serialize_fraction<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_fraction(r))
}

pub fn serialize_opt_fraction<S: serde::Serializer>(
    r: &Option<Rational>,
    s: S,
) -> Result<S::Ok, S::Error> {
    match r {
        Some(r) => serialize_fraction(r, s),
        None => s.serialize_none(),
    }
}
