//! Number types used throughout the crate.
//!
//! Every structure is generic over a [`Scalar`]. Two implementations exist:
//! [`Rational`] (arbitrary precision, exact comparisons) and `f64` (comparisons
//! against [`FLOAT_TOLERANCE`]). Rational is the default everywhere.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact arbitrary-precision rational number.
pub type Rational = BigRational;

/// Absolute tolerance used by the floating-point scalar.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// Field operations plus the comparisons the solvers need.
///
/// Sign tests go through [`Scalar::is_negligible`], [`Scalar::is_positive`]
/// and [`Scalar::is_negative`] so that the float implementation can apply its
/// tolerance while the rational one stays exact.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    /// True when arithmetic is exact.
    const EXACT: bool;

    fn from_rational(value: &Rational) -> Self;

    /// Best rational representation. Floats convert exactly from their
    /// binary expansion.
    fn to_rational(&self) -> Rational;

    fn to_f64(&self) -> f64;

    fn is_negligible(&self) -> bool;

    fn is_positive(&self) -> bool;

    fn is_negative(&self) -> bool;

    fn abs(&self) -> Self;

    /// Renders the value as `p/q` (exact) or with 12 significant digits.
    fn render(&self) -> String;

    fn from_i64(value: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(value)))
    }

    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).is_negligible()
    }

    /// Integer power by repeated squaring.
    fn powu(&self, mut exp: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base.clone();
            }
            exp >>= 1;
            if exp > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    /// Largest integer not above the value.
    fn floor(&self) -> Self;

    fn ceil(&self) -> Self;
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(value: &Rational) -> Self {
        value.clone()
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn floor(&self) -> Self {
        BigRational::floor(self)
    }

    fn ceil(&self) -> Self {
        BigRational::ceil(self)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(value: &Rational) -> Self {
        ToPrimitive::to_f64(value).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Rational {
        BigRational::from_float(*self).unwrap_or_else(Rational::zero)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_negligible(&self) -> bool {
        f64::abs(*self) <= FLOAT_TOLERANCE
    }

    fn is_positive(&self) -> bool {
        *self > FLOAT_TOLERANCE
    }

    fn is_negative(&self) -> bool {
        *self < -FLOAT_TOLERANCE
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn render(&self) -> String {
        format_significant(*self, 12)
    }

    fn floor(&self) -> Self {
        f64::floor(*self)
    }

    fn ceil(&self) -> Self {
        f64::ceil(*self)
    }
}

fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let magnitude = value.abs().log10().floor() as i32;
    if (-5..15).contains(&magnitude) {
        let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
        let text = format!("{value:.decimals$}");
        if text.contains('.') {
            text.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            text
        }
    } else {
        format!("{:.*e}", digits - 1, value)
    }
}

/// Error produced by [`parse_rational`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid number literal `{0}`")]
pub struct NumberError(pub String);

/// Parses `p`, `p/q`, or a decimal such as `-0.125` or `1.5e-3` into an
/// exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, NumberError> {
    let err = || NumberError(text.to_string());
    let text = text.trim();
    if text.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = text.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(num, den));
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (
            &text[..pos],
            text[pos + 1..].parse::<i32>().map_err(|_| err())?,
        ),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str(&all_digits).map_err(|_| err())?);
    let ten = Rational::from_integer(BigInt::from(10));
    let shift = exponent - frac_part.len() as i32;
    if shift >= 0 {
        value *= ten.pow(shift);
    } else {
        value /= ten.pow(-shift);
    }
    Ok(if negative { -value } else { value })
}

/// Parses a literal directly into any scalar type.
pub fn parse_scalar<S: Scalar>(text: &str) -> Result<S, NumberError> {
    parse_rational(text).map(|r| S::from_rational(&r))
}

/// Shorthand for `p/q` as a [`Rational`].
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Shorthand for an integer as a [`Rational`].
pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}
