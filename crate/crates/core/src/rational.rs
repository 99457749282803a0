//! Helpers for exact rationals: construction, `p/q` literals and serde.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always in lowest terms with a positive
/// denominator (guaranteed by `num_rational`).
pub type ExactRational = BigRational;

pub fn rat(numer: i64, denom: i64) -> ExactRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: u64) -> ExactRational {
    BigRational::from_integer(BigInt::from(value))
}

/// `1 / value`.
pub fn recip(value: u64) -> ExactRational {
    BigRational::new(BigInt::one(), BigInt::from(value))
}

/// `2^-n`.
pub fn pow2_neg(n: u64) -> ExactRational {
    BigRational::new(BigInt::one(), BigInt::one() << n)
}

/// Parses `p/q` or a bare integer. Decimal notation is rejected so that
/// every input is exact.
pub fn parse_rational(text: &str) -> Result<ExactRational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad numerator in {text:?}")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad denominator in {text:?}")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {text:?}")));
    }
    Ok(BigRational::new(num, den))
}

/// Parses an exponent: `p/q`, an integer, or a finite decimal such as `0.5`
/// (converted exactly to `5/10`).
pub fn parse_exponent(text: &str) -> Result<ExactRational> {
    let text = text.trim();
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parse(format!("bad decimal {text:?}")));
        }
        let negative = whole.starts_with('-');
        let whole = whole.trim_start_matches('-');
        let whole: BigInt = if whole.is_empty() {
            BigInt::zero()
        } else {
            whole
                .parse()
                .map_err(|_| Error::Parse(format!("bad decimal {text:?}")))?
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac: BigInt = frac.parse().expect("checked digits");
        let value = BigRational::new(whole * &scale + frac, scale);
        return Ok(if negative { -value } else { value });
    }
    parse_rational(text)
}

pub fn format_rational(value: &ExactRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn to_f64(value: &ExactRational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        // Ratios of huge integers: scale both sides down first.
        let shift = value.numer().bits().max(value.denom().bits()).saturating_sub(1000);
        let n = (value.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (value.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        if d == 0.0 {
            if value.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        } else {
            n / d
        }
    })
}

/// Exact rational from an `f64` (every finite double is a dyadic rational).
pub fn from_f64(value: f64) -> Option<ExactRational> {
    BigRational::from_float(value)
}

pub fn abs_diff(a: &ExactRational, b: &ExactRational) -> ExactRational {
    (a - b).abs()
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod serde_str {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &ExactRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ExactRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<ExactRational>`.
pub mod serde_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[ExactRational], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<ExactRational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_rational(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_literals() {
        assert_eq!(parse_rational("3/10").unwrap(), rat(3, 10));
        assert_eq!(parse_rational("6/4").unwrap(), rat(3, 2));
        assert_eq!(parse_rational("0/1").unwrap(), rat(0, 1));
        assert!(parse_rational("0.3").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn exponents_accept_decimals_exactly() {
        assert_eq!(parse_exponent("0.5").unwrap(), rat(1, 2));
        assert_eq!(parse_exponent("0.9").unwrap(), rat(9, 10));
        assert_eq!(parse_exponent("3/4").unwrap(), rat(3, 4));
    }

    #[test]
    fn huge_ratio_to_f64() {
        let tiny = BigRational::new(BigInt::one(), BigInt::from(7u32).pow(900));
        let v = to_f64(&(&tiny / &tiny * rat(1, 3)));
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
}
