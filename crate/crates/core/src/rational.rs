//! Exact rationals and their `"p/q"` text form.

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// `"p/q"` in lowest terms with a positive denominator. Integers keep the
/// `/1`, so every value has the same shape.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses the `"p/q"` form. Rejects anything that is not already in lowest
/// terms, so parsing and formatting are inverse.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Config(format!("malformed rational {s:?}"));
    let (p, q) = s.split_once('/').ok_or_else(bad)?;
    let p: i64 = p.parse().map_err(|_| bad())?;
    let q: i64 = q.parse().map_err(|_| bad())?;
    if q <= 0 {
        return Err(bad());
    }
    let r = Rational::new(p, q);
    if *r.numer() != p || *r.denom() != q {
        return Err(bad());
    }
    Ok(r)
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// `1 / (m + 1)`, the step height of a staircase with `m` steps.
pub fn step(m: u64) -> Rational {
    Rational::new(1, m as i64 + 1)
}

pub fn pow2_inv(n: u32) -> Rational {
    Rational::new(1, 1i64 << n.min(62))
}

/// Serde adapter for `Rational` fields.
pub mod serde_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_form() {
        assert_eq!(format_rational(&Rational::new(10, 22)), "5/11");
        assert_eq!(format_rational(&Rational::from_integer(1)), "1/1");
        assert_eq!(parse_rational("5/11").unwrap(), Rational::new(5, 11));
        assert!(parse_rational("10/22").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("0.5").is_err());
    }
}
