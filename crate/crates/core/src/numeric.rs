//! Exact rational helpers shared by every module.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

/// Denominator used whenever an irrational quantity has to be frozen into a rational.
pub const DYADIC_BITS: u32 = 20;

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn sqrt_f64(x: &Q) -> f64 {
    to_f64(x).max(0.0).sqrt()
}

fn dyadic_scale() -> BigInt {
    BigInt::one() << DYADIC_BITS
}

/// Smallest multiple of 2^-20 that is >= x (x finite).
pub fn ceil_dyadic(x: f64) -> Q {
    let scaled = (x * f64::from(1u32 << DYADIC_BITS)).ceil();
    Q::new(BigInt::from(scaled as i128), dyadic_scale())
}

/// Largest multiple of 2^-20 that is <= x.
pub fn floor_dyadic(x: f64) -> Q {
    let scaled = (x * f64::from(1u32 << DYADIC_BITS)).floor();
    Q::new(BigInt::from(scaled as i128), dyadic_scale())
}

/// Nearest multiple of 2^-20.
pub fn round_dyadic(x: f64) -> Q {
    let scaled = (x * f64::from(1u32 << DYADIC_BITS)).round();
    Q::new(BigInt::from(scaled as i128), dyadic_scale())
}

/// Exact conversion of a finite float.
pub fn from_f64_exact(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::invalid(format!("non-finite number {x}")))
}

/// Parses `"3"`, `"-1.25"`, `"7/4"` or `"1e-3"` into an exact rational.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::invalid(format!("cannot parse rational from {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("0{int_part}{frac_part}").parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Q::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        Q::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        value = -value;
    }
    Ok(value)
}

/// Parses a JSON number or string into an exact rational, keeping decimal literals exact.
pub fn q_from_json(v: &serde_json::Value) -> Result<Q> {
    match v {
        serde_json::Value::Number(n) => parse_q(&n.to_string()),
        serde_json::Value::String(s) => parse_q(s),
        other => Err(Error::invalid(format!("expected a number, found {other}"))),
    }
}

pub fn q_to_string(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Decides `sqrt(a) + sqrt(b) >= sqrt(c)` exactly for non-negative rationals.
pub fn sqrt_sum_ge(a: &Q, b: &Q, c: &Q) -> bool {
    let t = c - a - b;
    if !t.is_positive() {
        return true;
    }
    qi(4) * a * b >= &t * &t
}

/// Integer power of a rational.
pub fn q_pow(x: &Q, e: u32) -> Q {
    num_traits::pow(x.clone(), e as usize)
}

pub fn q_abs(x: &Q) -> Q {
    x.abs()
}

/// `x^(p/q)` evaluated in floating point.
pub fn powf(x: f64, e: f64) -> f64 {
    x.powf(e)
}

pub fn lcm_denominators<'a>(xs: impl IntoIterator<Item = &'a Q>) -> BigInt {
    xs.into_iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_q("0.1").unwrap(), qr(1, 10));
        assert_eq!(parse_q("-2.50").unwrap(), qr(-5, 2));
        assert_eq!(parse_q("3/6").unwrap(), qr(1, 2));
        assert_eq!(parse_q("1e-3").unwrap(), qr(1, 1000));
        assert_eq!(parse_q("12").unwrap(), qi(12));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
    }

    #[test]
    fn dyadic_rounding_brackets_value() {
        let x = 2f64.sqrt();
        let lo = floor_dyadic(x);
        let hi = ceil_dyadic(x);
        assert!(to_f64(&lo) <= x && x <= to_f64(&hi));
        assert_eq!(&hi - &lo, qr(1, 1 << 20));
    }

    #[test]
    fn exact_sqrt_triangle_check() {
        // sqrt(1) + sqrt(1) >= sqrt(4) holds with equality, sqrt(4.01) fails.
        assert!(sqrt_sum_ge(&qi(1), &qi(1), &qi(4)));
        assert!(!sqrt_sum_ge(&qi(1), &qi(1), &qr(401, 100)));
        assert!(sqrt_sum_ge(&qi(9), &qi(16), &qi(49)));
        assert!(!sqrt_sum_ge(&qi(9), &qi(16), &qi(50)));
    }
}
