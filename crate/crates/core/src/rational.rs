//! Exact rational helpers shared by the relation engine and the calibration solver.
//!
//! Instance files carry rationals as strings: `"3"`, `"-1/2"`, `"0.125"`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Scale factors, compositions and grid values.
pub type Rational = Rational64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal `{0}`")]
pub struct ParseRationalError(pub String);

fn split_literal(text: &str) -> Result<(BigInt, BigInt), ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let t = text.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| err())?;
        let d: BigInt = den.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok((n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let negative = int.trim_start().starts_with('-');
        let digits = frac.len() as u32;
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let int_part: BigInt = match int.trim() {
            "" | "+" => BigInt::zero(),
            "-" => BigInt::zero(),
            s => s.parse().map_err(|_| err())?,
        };
        let frac_part: BigInt = frac.parse().map_err(|_| err())?;
        let scale = BigInt::from(10u32).pow(digits);
        let magnitude = int_part.abs() * &scale + frac_part;
        let n = if negative { -magnitude } else { magnitude };
        return Ok((n, scale));
    }
    let n: BigInt = t.parse().map_err(|_| err())?;
    Ok((n, BigInt::one()))
}

/// Parses `p/q`, an integer, or a finite decimal into a 64-bit rational.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let big = parse_big_rational(text)?;
    let n = big.numer().to_i64();
    let d = big.denom().to_i64();
    match (n, d) {
        (Some(n), Some(d)) => Ok(Rational::new(n, d)),
        _ => Err(ParseRationalError(text.to_string())),
    }
}

/// Parses `p/q`, an integer, or a finite decimal exactly.
pub fn parse_big_rational(text: &str) -> Result<BigRational, ParseRationalError> {
    let (n, d) = split_literal(text)?;
    Ok(BigRational::new(n, d))
}

/// Exact conversion of a finite float; `None` for NaN or infinities.
pub fn big_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn big_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_positive() {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    })
}

pub fn to_big(r: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// `p/q` rendering used in instance files; integers render without a denominator.
pub struct Display<'a>(pub &'a Rational);

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self.0.denom() == 1 {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

pub fn format_rational(r: &Rational) -> String {
    Display(r).to_string()
}

pub fn format_big(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde adapter for `Rational` fields stored as strings.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>` stored as a list of strings.
pub mod serde_rational_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_rational(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for `BigRational` fields stored as strings.
pub mod serde_big {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_big(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_big_rational(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<BigRational>` stored as a list of strings.
pub mod serde_big_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_big))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_big_rational(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_rational("1/2").unwrap(), Rational::new(1, 2));
        assert_eq!(parse_rational(" 4/8 ").unwrap(), Rational::new(1, 2));
        assert_eq!(parse_rational("-3").unwrap(), Rational::from_integer(-3));
        assert_eq!(parse_rational("0.125").unwrap(), Rational::new(1, 8));
        assert_eq!(parse_rational("-0.5").unwrap(), Rational::new(-1, 2));
        assert_eq!(parse_rational("-1.25").unwrap(), Rational::new(-5, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1.").is_err());
    }

    #[test]
    fn float_conversion_is_exact() {
        let r = big_from_f64(0.1).unwrap();
        assert_eq!(big_to_f64(&r), 0.1);
        assert_ne!(r, parse_big_rational("0.1").unwrap());
        assert!(big_from_f64(f64::NAN).is_none());
    }

    #[test]
    fn formats_round_trip() {
        for text in ["1/2", "7", "-3/4"] {
            let r = parse_rational(text).unwrap();
            assert_eq!(format_rational(&r), text);
        }
    }
}
