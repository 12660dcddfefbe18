//! Parsers for command-line and config values.

use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Zero;
use supnorm_core::hyperbolic::PlanePoint;
use supnorm_core::quaternion::Rational;
use thiserror::Error;

/// Longest accepted numerator or denominator, in characters.
const MAX_DIGITS: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty value")]
    Empty,
    #[error("invalid integer {0:?}")]
    Integer(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("number {0:?} is too long")]
    TooLong(String),
    #[error("point {0:?} must be written x,y")]
    PointShape(String),
    #[error("invalid number {0:?}")]
    Float(String),
    #[error("point {0:?} is not in the upper half-plane")]
    NotInUpperHalfPlane(String),
    #[error("item {index} of list: {message}")]
    Item { index: usize, message: String },
}

fn integer(s: &str) -> Result<BigInt, ParseError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(ParseError::Empty);
    }
    if t.len() > MAX_DIGITS {
        return Err(ParseError::TooLong(t.chars().take(16).collect()));
    }
    let digits = t.strip_prefix(['-', '+']).unwrap_or(t);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseError::Integer(t.to_string()));
    }
    BigInt::from_str(t).map_err(|_| ParseError::Integer(t.to_string()))
}

/// `n` or `n/d` with integers `n`, `d` and `d ≠ 0`.
pub fn parse_rational(s: &str) -> Result<Rational, ParseError> {
    match s.split_once('/') {
        None => Ok(Rational::from_integer(integer(s)?)),
        Some((n, d)) => {
            let (n, d) = (integer(n)?, integer(d)?);
            if d.is_zero() {
                return Err(ParseError::ZeroDenominator(s.trim().to_string()));
            }
            Ok(Rational::new(n, d))
        }
    }
}

fn finite(s: &str) -> Result<f64, ParseError> {
    let t = s.trim();
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ParseError::Float(t.to_string())),
    }
}

/// `x,y` with `y > 0`.
pub fn parse_point(s: &str) -> Result<PlanePoint, ParseError> {
    let (x, y) = s.split_once(',').ok_or_else(|| ParseError::PointShape(s.to_string()))?;
    if y.contains(',') {
        return Err(ParseError::PointShape(s.to_string()));
    }
    PlanePoint::new(finite(x)?, finite(y)?).map_err(|_| ParseError::NotInUpperHalfPlane(s.to_string()))
}

/// Comma-separated values.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, ParseError>
where
    T::Err: std::fmt::Display,
{
    if s.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    s.split(',')
        .enumerate()
        .map(|(index, item)| {
            item.trim().parse::<T>().map_err(|e| ParseError::Item { index, message: e.to_string() })
        })
        .collect()
}

/// Comma-separated finite reals.
pub fn parse_real_list(s: &str) -> Result<Vec<f64>, ParseError> {
    let values: Vec<f64> = parse_list(s)?;
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(ParseError::Item { index, message: "not finite".into() }),
        None => Ok(values),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use supnorm_core::quaternion::ratio;

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("3").unwrap(), ratio(3, 1));
        assert_eq!(parse_rational(" -2/4 ").unwrap(), ratio(-1, 2));
        assert_eq!(parse_rational("1/-2").unwrap(), ratio(-1, 2));
        assert!(matches!(parse_rational("1/0"), Err(ParseError::ZeroDenominator(_))));
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1/2/3").is_err());
        assert!(parse_rational("0x1").is_err());
        assert!(parse_rational("-").is_err());
        assert!(parse_rational(&"9".repeat(600)).is_err());
    }

    #[test]
    fn points() {
        let z = parse_point("0.5, 2").unwrap();
        assert_eq!((z.x(), z.y()), (0.5, 2.0));
        assert!(matches!(parse_point("0,0"), Err(ParseError::NotInUpperHalfPlane(_))));
        assert!(matches!(parse_point("0,-1"), Err(ParseError::NotInUpperHalfPlane(_))));
        assert!(parse_point("1").is_err());
        assert!(parse_point("1,2,3").is_err());
        assert!(parse_point("nan,1").is_err());
        assert!(parse_point("0,inf").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<u64>("2, 3,5").unwrap(), vec![2, 3, 5]);
        assert!(matches!(parse_list::<u64>("2,x"), Err(ParseError::Item { index: 1, .. })));
        assert!(parse_list::<u64>("").is_err());
        assert!(parse_real_list("1,inf").is_err());
        assert_eq!(parse_real_list("1.5,-2").unwrap(), vec![1.5, -2.0]);
    }

    proptest! {
        #[test]
        fn rational_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
            let q = parse_rational(&format!("{n}/{d}")).unwrap();
            prop_assert_eq!(parse_rational(&q.to_string()).unwrap(), q);
        }

        #[test]
        fn arbitrary_text_never_panics(s in "\\PC{0,40}") {
            let _ = parse_rational(&s);
            let _ = parse_point(&s);
            let _ = parse_list::<u64>(&s);
        }
    }
}
