use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::combinat::SupportFilter;
use crate::error::{Error, Result};
use crate::linalg::{rational_from_f64, Rational, Scalar};

/// Closure bundle for a user-supplied activation.
pub struct CustomActivation {
    pub name: String,
    pub value: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub derivative: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub center: f64,
    /// Taylor coefficients of `psi(center + x)` for degrees `0..=K`.
    pub taylor: Box<dyn Fn(usize) -> Vec<Rational> + Send + Sync>,
    pub radius: f64,
}

impl fmt::Debug for CustomActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomActivation")
            .field("name", &self.name)
            .field("center", &self.center)
            .field("radius", &self.radius)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Activation {
    /// `sum_k c_k x^k`, expanded at 0.
    Polynomial(SupportFilter),
    Tanh,
    Logistic,
    Arctan,
    Gelu,
    Custom(Arc<CustomActivation>),
}

/// How the Jacobian's Hadamard function is read off `psi'` and `eta`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiReading {
    /// `phi(x) = psi'(eta + x)`.
    #[default]
    Recentered,
    /// `phi(x) = psi'(x) - eta`.
    ConstantShift,
}

// 1/sqrt(2 pi), the only irrational constant in the GELU series.
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

impl Activation {
    pub fn cubic() -> Self {
        Activation::Polynomial(SupportFilter::from_i64(&[0, 0, 0, 1]))
    }

    /// Accepts `tanh`, `logistic`, `arctan`, `gelu`, `cubic`, or
    /// `poly:c0,c1,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "tanh" => Ok(Activation::Tanh),
            "logistic" | "sigmoid" => Ok(Activation::Logistic),
            "arctan" | "atan" => Ok(Activation::Arctan),
            "gelu" => Ok(Activation::Gelu),
            "cubic" => Ok(Activation::cubic()),
            _ => match s.strip_prefix("poly:") {
                Some(cs) => Ok(Activation::Polynomial(SupportFilter::parse(cs)?)),
                None => Err(Error::Parse(format!("unknown activation {s:?}"))),
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            Activation::Polynomial(c) => format!("poly:{}", c.label()),
            Activation::Tanh => "tanh".into(),
            Activation::Logistic => "logistic".into(),
            Activation::Arctan => "arctan".into(),
            Activation::Gelu => "gelu".into(),
            Activation::Custom(c) => c.name.clone(),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Activation::Polynomial(c) => horner(&c.coefficients, x),
            Activation::Tanh => x.tanh(),
            Activation::Logistic => 1.0 / (1.0 + (-x).exp()),
            Activation::Arctan => x.atan(),
            Activation::Gelu => x * normal_cdf(x),
            Activation::Custom(c) => (c.value)(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Activation::Polynomial(c) => {
                let d: Vec<Rational> =
                    c.coefficients.iter().enumerate().skip(1).map(|(k, a)| a * Rational::from_i64(k as i64)).collect();
                horner(&d, x)
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Logistic => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 - s)
            }
            Activation::Arctan => 1.0 / (1.0 + x * x),
            Activation::Gelu => normal_cdf(x) + x * INV_SQRT_2PI * (-0.5 * x * x).exp(),
            Activation::Custom(c) => (c.derivative)(x),
        }
    }

    /// Expansion point `eta`.
    pub fn center(&self) -> f64 {
        match self {
            Activation::Custom(c) => c.center,
            _ => 0.0,
        }
    }

    /// Radius of convergence of the series at `eta`.
    pub fn radius(&self) -> f64 {
        match self {
            Activation::Polynomial(_) | Activation::Gelu => f64::INFINITY,
            Activation::Tanh => std::f64::consts::FRAC_PI_2,
            Activation::Logistic => std::f64::consts::PI,
            Activation::Arctan => 1.0,
            Activation::Custom(c) => c.radius,
        }
    }

    pub fn as_polynomial(&self) -> Option<&SupportFilter> {
        match self {
            Activation::Polynomial(c) => Some(c),
            _ => None,
        }
    }

    /// Coefficients of `psi(eta + x)` for degrees `0..=max_degree`.
    pub fn taylor_value(&self, max_degree: usize) -> Vec<Rational> {
        let n = max_degree + 1;
        let mut out = match self {
            Activation::Polynomial(c) => (0..n).map(|k| c.coefficient(k)).collect(),
            // tanh' = 1 - tanh^2, s' = s - s^2
            Activation::Tanh => riccati_series(Rational::zero(), n, |sq, _, k| {
                if k == 0 { Rational::one() - sq } else { -sq }
            }),
            Activation::Logistic => riccati_series(half(), n, |sq, a, _| a - sq),
            Activation::Arctan => arctan_series(n),
            Activation::Gelu => gelu_series(n),
            Activation::Custom(c) => (c.taylor)(max_degree),
        };
        out.resize(n, Rational::zero());
        out
    }

    /// Coefficients of `psi'(eta + x)` for degrees `0..=max_degree`.
    pub fn taylor_derivative(&self, max_degree: usize) -> Vec<Rational> {
        self.taylor_value(max_degree + 1)
            .into_iter()
            .enumerate()
            .skip(1)
            .map(|(k, a)| a * Rational::from_i64(k as i64))
            .collect()
    }

    /// The Hadamard function `phi` that multiplies `X` in the Jacobian.
    pub fn phi(&self, x: f64, reading: PhiReading) -> f64 {
        match reading {
            PhiReading::Recentered => self.derivative(self.center() + x),
            PhiReading::ConstantShift => self.derivative(x) - self.center(),
        }
    }
}

impl Serialize for Activation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

fn horner(coeffs: &[Rational], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c.to_f64())
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

fn half() -> Rational {
    Rational::new(1.into(), 2.into())
}

/// Power series of a solution of `a' = rhs(a^2, a)` with `a(0) = a0`,
/// where `rhs` acts on the degree-`k` coefficients of `a^2` and `a`.
fn riccati_series(a0: Rational, n: usize, rhs: impl Fn(Rational, &Rational, usize) -> Rational) -> Vec<Rational> {
    let mut a = vec![a0];
    for k in 0..n.saturating_sub(1) {
        let sq: Rational = (0..=k).map(|i| &a[i] * &a[k - i]).sum();
        let next = rhs(sq, &a[k], k) / Rational::from_i64(k as i64 + 1);
        a.push(next);
    }
    a.truncate(n);
    a
}

fn arctan_series(n: usize) -> Vec<Rational> {
    (0..n)
        .map(|k| {
            if k % 2 == 0 {
                Rational::zero()
            } else {
                let sign = if (k / 2) % 2 == 0 { 1 } else { -1 };
                Rational::new(sign.into(), (k as i64).into())
            }
        })
        .collect()
}

// x * Phi(x) = x/2 + c * sum_j (-1)^j x^{2j+2} / (2^j j! (2j+1)).
fn gelu_series(n: usize) -> Vec<Rational> {
    let c = rational_from_f64(INV_SQRT_2PI);
    let mut out = vec![Rational::zero(); n];
    if n > 1 {
        out[1] = half();
    }
    let mut denom = Rational::one();
    let mut j = 0i64;
    while 2 * j as usize + 2 < n {
        if j > 0 {
            denom *= Rational::from_i64(2 * j);
        }
        let sign = if j % 2 == 0 { Rational::one() } else { -Rational::one() };
        out[2 * j as usize + 2] = &c * sign / (&denom * Rational::from_i64(2 * j + 1));
        j += 1;
    }
    out
}
