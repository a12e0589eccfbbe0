//! Coefficient fields used by the subgrid construction.
//!
//! The construction runs either in exact rational arithmetic or in `f64`.
//! Everything generic over [`Scalar`] behaves identically in both modes except
//! for the meaning of "zero": exact for rationals, a small absolute threshold
//! for floats.

use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Coefficients below this magnitude are dropped from float polynomials.
pub const FLOAT_DROP_TOL: f64 = 1e-14;

/// Residual threshold for declaring a float construction converged.
pub const FLOAT_CONVERGED_TOL: f64 = 1e-12;

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
    + for<'a> DivAssign<&'a Self>
{
    /// True for rational arithmetic.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_int(v: i64) -> Self {
        Self::from_ratio(v, 1)
    }

    fn to_f64(&self) -> f64;

    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }

    /// Whether a coefficient should be treated as absent from a polynomial.
    fn negligible(&self) -> bool;

    /// Whether a residual coefficient counts as converged.
    fn converged(&self) -> bool;

    /// As [`Scalar::converged`] for a quantity of typical size `scale`.
    fn converged_at(&self, scale: f64) -> bool;

    fn to_exact_string(&self) -> String;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn negligible(&self) -> bool {
        self.abs() <= FLOAT_DROP_TOL
    }

    fn converged(&self) -> bool {
        self.abs() <= FLOAT_CONVERGED_TOL
    }

    fn converged_at(&self, scale: f64) -> bool {
        self.abs() <= FLOAT_CONVERGED_TOL * scale.max(1.0)
    }

    fn to_exact_string(&self) -> String {
        format!("{self:e}")
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // numerator or denominator exceeds f64 range on its own
            let n = self.numer().to_string().len() as i32;
            let d = self.denom().to_string().len() as i32;
            let sign = if self.is_negative() { -1.0 } else { 1.0 };
            sign * 10f64.powi(n - d)
        })
    }

    fn negligible(&self) -> bool {
        self.is_zero()
    }

    fn converged(&self) -> bool {
        self.is_zero()
    }

    fn converged_at(&self, _scale: f64) -> bool {
        self.is_zero()
    }

    fn to_exact_string(&self) -> String {
        self.to_string()
    }
}

/// Arithmetic mode selectable at run time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithmeticMode {
    Rational,
    Float,
}

impl ArithmeticMode {
    /// Reads `HOLISTIC_MODE`, defaulting to rational.
    pub fn from_env() -> Result<Self, String> {
        match std::env::var("HOLISTIC_MODE") {
            Ok(v) => v.parse(),
            Err(_) => Ok(ArithmeticMode::Rational),
        }
    }
}

impl std::str::FromStr for ArithmeticMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rational" | "exact" => Ok(ArithmeticMode::Rational),
            "float" | "f64" => Ok(ArithmeticMode::Float),
            other => Err(format!("unknown arithmetic mode `{other}` (expected rational|float)")),
        }
    }
}

impl Display for ArithmeticMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ArithmeticMode::Rational => f.write_str("rational"),
            ArithmeticMode::Float => f.write_str("float"),
        }
    }
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::from_ratio(num, den)
}
