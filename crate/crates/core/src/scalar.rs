//! Scalar abstraction shared by every planner and oracle.
//!
//! Costs and probabilities are carried as a generic [`Scalar`]. Floating
//! point (`f32`, `f64`) is the everyday choice; [`BigRational`] gives exact
//! arithmetic for small models, where every identity holds with zero slack.

use std::fmt::Debug;
use std::iter::Sum;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Numeric type usable for costs and probabilities.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Sum + Send + Sync + 'static
{
    /// Absolute slack for comparisons of derived costs and probabilities.
    fn tolerance() -> Self;

    /// Smallest decrease that counts as a strict improvement during search.
    fn improvement() -> Self;

    /// Slack allowed when checking that a user-supplied distribution sums to one.
    fn normalization_tolerance() -> Self;

    /// Converts a decimal value as written in a model file.
    ///
    /// Exact types take the shortest decimal representation of `x`, so `0.1`
    /// becomes one tenth rather than the nearest binary fraction.
    fn lit(x: f64) -> Self;

    /// Lossy conversion for display and sampling.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tolerance()
    }

    /// `self <= other` up to [`Scalar::tolerance`].
    fn approx_le(&self, other: &Self) -> bool {
        *self <= other.clone() + Self::tolerance()
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }
    fn improvement() -> Self {
        1e-12
    }
    fn normalization_tolerance() -> Self {
        1e-6
    }
    fn lit(x: f64) -> Self {
        x
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-4
    }
    fn improvement() -> Self {
        1e-6
    }
    fn normalization_tolerance() -> Self {
        1e-4
    }
    fn lit(x: f64) -> Self {
        x as f32
    }
}

impl Scalar for BigRational {
    fn tolerance() -> Self {
        BigRational::zero()
    }
    fn improvement() -> Self {
        BigRational::zero()
    }
    fn normalization_tolerance() -> Self {
        BigRational::zero()
    }
    fn lit(x: f64) -> Self {
        decimal_to_rational(x)
    }
}

/// Parses the shortest round-trip decimal form of `x` into a rational.
fn decimal_to_rational(x: f64) -> BigRational {
    assert!(x.is_finite(), "non-finite value {x} has no rational form");
    // `Display` for f64 never uses exponent notation.
    let text = format!("{x}");
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    let numer = BigInt::from_str(&format!("{int_part}{frac_part}")).expect("decimal digits");
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let value = BigRational::new(numer, denom);
    if negative {
        -value
    } else {
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_literals_are_decimal_exact() {
        assert_eq!(BigRational::lit(0.1), BigRational::new(1.into(), 10.into()));
        assert_eq!(BigRational::lit(-2.5), BigRational::new((-5).into(), 2.into()));
        assert_eq!(BigRational::lit(7.0), BigRational::from_integer(7.into()));
        assert_eq!(BigRational::lit(1e-7), BigRational::new(1.into(), 10_000_000.into()));
    }

    #[test]
    fn approx_helpers_respect_tolerance() {
        assert!(1.0f64.approx_eq(&(1.0 + 1e-10)));
        assert!(!1.0f64.approx_eq(&(1.0 + 1e-8)));
        assert!(1.0f64.approx_le(&(1.0 - 1e-10)));
        let third = BigRational::new(1.into(), 3.into());
        assert!(!third.approx_eq(&BigRational::lit(0.3333333333)));
    }
}
