//! Exact rational scalars and their canonical text encoding.
//!
//! Every numeric quantity in this crate is a [`Rat`]: an arbitrary-precision
//! rational. Text form is `"numerator/denominator"` with a reduced fraction
//! and a positive denominator (`"-3/2"`, `"5/1"`). Decimal and exponent
//! notation is rejected on parse so that no float ever enters the pipeline.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::str::FromStr;

pub type Rat = BigRational;

/// Shorthand for `n/d` used heavily in tests and generators.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RatParseError {
    #[error("invalid rational `{0}`: floats are rejected, use \"numerator/denominator\"")]
    FloatRejected(String),
    #[error("invalid rational `{0}`: expected \"numerator/denominator\"")]
    Malformed(String),
    #[error("invalid rational `{0}`: denominator must be positive")]
    BadDenominator(String),
}

/// Parses `"n/d"` (or a bare integer `"n"`). Rejects anything resembling a
/// float (`.`, `e`, `E`) with a dedicated error.
pub fn parse_rat(s: &str) -> Result<Rat, RatParseError> {
    let t = s.trim();
    if t.contains(['.', 'e', 'E']) {
        return Err(RatParseError::FloatRejected(s.to_string()));
    }
    let (num_s, den_s) = match t.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (t, None),
    };
    let num = BigInt::from_str(num_s).map_err(|_| RatParseError::Malformed(s.to_string()))?;
    let den = match den_s {
        Some(d) => {
            let den = BigInt::from_str(d).map_err(|_| RatParseError::Malformed(s.to_string()))?;
            if den.is_negative() || den.is_zero() {
                return Err(RatParseError::BadDenominator(s.to_string()));
            }
            den
        }
        None => BigInt::one(),
    };
    Ok(Rat::new(num, den))
}

/// Canonical text form: reduced `numerator/denominator`, denominator ≥ 1.
pub fn format_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn format_vec(v: &[Rat]) -> Vec<String> {
    v.iter().map(format_rat).collect()
}

pub fn parse_vec(v: &[String]) -> Result<Vec<Rat>, RatParseError> {
    v.iter().map(|s| parse_rat(s)).collect()
}
