use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Arbitrary-precision rational; the exact backend.
pub type Rational = BigRational;

/// Which arithmetic a matrix or rank result lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Exact,
    Float,
}

/// Field operations shared by both backends.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    const BACKEND: Backend;

    fn from_i64(v: i64) -> Self;

    /// Exact for the rational backend, nearest double for floats.
    fn from_rational(r: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    fn powu(&self, k: u32) -> Self {
        num_traits::pow::pow(self.clone(), k as usize)
    }

    /// Determinant of a square row-major block of size `n`.
    fn determinant(entries: &[Self], n: usize) -> Self;

    /// Parses one entry of the matrix text format.
    fn parse_entry(s: &str) -> Option<Self>;
}

impl Scalar for Rational {
    const BACKEND: Backend = Backend::Exact;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn determinant(entries: &[Self], n: usize) -> Self {
        crate::linalg::bareiss::det_rational(entries, n)
    }

    fn parse_entry(s: &str) -> Option<Self> {
        parse_rational(s)
    }
}

impl Scalar for f64 {
    const BACKEND: Backend = Backend::Float;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn powu(&self, k: u32) -> Self {
        self.powi(k as i32)
    }

    fn determinant(entries: &[Self], n: usize) -> Self {
        if n == 0 {
            return 1.0;
        }
        nalgebra::DMatrix::from_row_slice(n, n, entries).determinant()
    }

    fn parse_entry(s: &str) -> Option<Self> {
        s.parse::<f64>().ok().or_else(|| parse_rational(s).map(|r| Scalar::to_f64(&r)))
    }
}

/// Parses `p/q`, an integer, or a finite decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Ok(i) = s.parse::<BigInt>() {
        return Some(BigRational::from_integer(i));
    }
    parse_decimal(s)
}

// Decimal literals like "-1.25e-3" are taken at face value, not via f64.
fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow::pow(ten, (-scale) as usize))
    };
    if neg {
        value = -value;
    }
    Some(value)
}

/// Exact rational equal to the given finite double.
pub fn rational_from_f64(x: f64) -> Rational {
    BigRational::from_float(x).unwrap_or_else(Rational::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_rational("3/6"), Some(BigRational::new(1.into(), 2.into())));
        assert_eq!(parse_rational("-7"), Some(Rational::from_i64(-7)));
        assert_eq!(parse_rational("0.25"), Some(BigRational::new(1.into(), 4.into())));
        assert_eq!(parse_rational("-1.5e2"), Some(Rational::from_i64(-150)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("."), None);
    }

    #[test]
    fn float_determinant_matches_hand_value() {
        let d = f64::determinant(&[1.0, 2.0, 3.0, 4.0], 2);
        assert!((d + 2.0).abs() < 1e-12);
    }
}
