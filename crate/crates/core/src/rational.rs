//! Exact rational scalars.
//!
//! Every quantity in this crate (privacy parameters, probability masses,
//! losses, determinants, LP coefficients) is a [`Rational`]: an
//! arbitrary-precision fraction kept in canonical form, with the text form
//! `"p/q"` (or `"p"` for integers) used everywhere JSON crosses a boundary.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// An exact fraction p/q with q > 0 and gcd(|p|, q) = 1.
///
/// Canonical form is maintained by every operation; two values are equal
/// exactly when their canonical representations are.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    /// Builds `num/den`, reducing to canonical form.
    ///
    /// Panics if `den == 0`; fallible construction goes through `FromStr`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "denominator must be nonzero");
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }

    pub fn from_big(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "denominator must be nonzero");
        Rational(BigRational::new(num, den))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    /// Canonical numerator (carries the sign).
    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    /// Canonical denominator, always positive.
    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// `self` raised to a nonnegative integer power, with `0^0 = 1`.
    pub fn pow(&self, exp: u32) -> Rational {
        if exp == 0 {
            return Rational::one();
        }
        Rational(self.0.pow(exp as i32))
    }

    pub fn abs(&self) -> Rational {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Rational {
        assert!(!self.is_zero(), "cannot invert zero");
        Rational(self.0.recip())
    }

    pub fn min(self, other: Rational) -> Rational {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Rational) -> Rational {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Lossy conversion for statistics summaries; never used in core math.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

// Debug matches Display so assertion output stays readable.
impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Parses `"p/q"` or the integer shorthand `"p"`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::ParseRational(s.to_string());
        let (num_str, den_str) = match s.split_once('/') {
            Some((n, d)) => (n, Some(d)),
            None => (s, None),
        };
        let num = parse_int(num_str, true).ok_or_else(bad)?;
        let den = match den_str {
            Some(d) => {
                let den = parse_int(d, false).ok_or_else(bad)?;
                if den.is_zero() {
                    return Err(bad());
                }
                den
            }
            None => BigInt::one(),
        };
        Ok(Rational(BigRational::new(num, den)))
    }
}

fn parse_int(s: &str, allow_sign: bool) -> Option<BigInt> {
    let digits = if allow_sign {
        s.strip_prefix('-').unwrap_or(s)
    } else {
        s
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let n: BigInt = digits.parse().ok()?;
    Some(if allow_sign && s.starts_with('-') {
        BigInt::from_biguint(Sign::Minus, n.magnitude().clone())
    } else {
        n
    })
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((self.0).$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

/// Shorthand for tests and fixtures: `rat(1, 3)` is 1/3.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_on_construction() {
        assert_eq!(Rational::new(2, 4), Rational::new(1, 2));
        assert_eq!(Rational::new(-3, -6), Rational::new(1, 2));
        assert_eq!(Rational::new(3, -6), Rational::new(-1, 2));
        assert_eq!(Rational::new(0, 7), Rational::zero());
    }

    #[test]
    fn parse_and_display_roundtrip() {
        for s in ["1/2", "-3/4", "0", "7", "-13", "22/7"] {
            let r: Rational = s.parse().unwrap();
            assert_eq!(r.to_string(), s);
        }
        // Non-canonical input serializes canonically.
        let r: Rational = "2/4".parse().unwrap();
        assert_eq!(r.to_string(), "1/2");
        let r: Rational = "9/3".parse().unwrap();
        assert_eq!(r.to_string(), "3");
    }

    #[test]
    fn parse_rejects_garbage() {
        for s in ["", "/", "1/", "/2", "1/0", "1/-2", "a/b", "1.5", "+3", " 1/2"] {
            assert!(s.parse::<Rational>().is_err(), "accepted {s:?}");
        }
    }

    #[test]
    fn arithmetic_is_exact() {
        let a = rat(1, 3);
        let b = rat(1, 6);
        assert_eq!(&a + &b, rat(1, 2));
        assert_eq!(&a - &b, rat(1, 6));
        assert_eq!(&a * &b, rat(1, 18));
        assert_eq!(&a / &b, rat(2, 1));
        assert_eq!(-a, rat(-1, 3));
    }

    #[test]
    fn pow_conventions() {
        assert_eq!(Rational::zero().pow(0), Rational::one());
        assert_eq!(rat(1, 2).pow(3), rat(1, 8));
        assert_eq!(rat(-2, 3).pow(2), rat(4, 9));
    }

    #[test]
    fn ordering() {
        assert!(rat(1, 3) < rat(1, 2));
        assert!(rat(-1, 2) < Rational::zero());
        assert_eq!(rat(2, 6).min(rat(1, 2)), rat(1, 3));
    }
}
