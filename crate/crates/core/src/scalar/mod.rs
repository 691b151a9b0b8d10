//! Scalar abstraction shared by every numerical kernel in the crate.
//!
//! The determinant recursions, the dense oracle and the expansion
//! evaluators are written once against [`Real`] and instantiated at three
//! working precisions: native `f64`, [`DoubleDouble`] (~106 bits) and
//! [`BigReal`] (MPFR, precision chosen at runtime per thread).

mod big;
mod double_double;

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};

pub use big::{with_precision, working_precision, BigReal};
pub use double_double::DoubleDouble;

/// A real field with the elementary functions needed by the kernels.
pub trait Real:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + FromPrimitive
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    /// Short label used in diagnostics.
    const NAME: &'static str;

    fn pi() -> Self;
    fn ln2() -> Self;

    fn sqrt(&self) -> Self;
    fn ln(&self) -> Self;
    fn exp(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn tan(&self) -> Self {
        self.sin() / self.cos()
    }
    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn to_f64(&self) -> f64;

    /// Relative spacing of the working format (2^-p).
    fn unit_roundoff() -> f64;

    /// Mantissa bits of the working format.
    fn precision_bits() -> u32;

    /// Exact conversion of an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    fn from_int(i: i64) -> Self {
        <Self as FromPrimitive>::from_i64(i).expect("integer literal")
    }

    /// Nearest representable value of `num / den`.
    fn from_ratio(num: &BigInt, den: &BigInt) -> Self;

    fn powi(&self, exp: i32) -> Self {
        let mut base = if exp < 0 {
            Self::one() / self.clone()
        } else {
            self.clone()
        };
        let mut e = exp.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

impl Real for f64 {
    const NAME: &'static str = "f64";

    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn ln2() -> Self {
        std::f64::consts::LN_2
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn tan(&self) -> Self {
        f64::tan(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn unit_roundoff() -> f64 {
        f64::EPSILON / 2.0
    }
    fn precision_bits() -> u32 {
        f64::MANTISSA_DIGITS
    }
    fn from_ratio(num: &BigInt, den: &BigInt) -> Self {
        num_rational::BigRational::new(num.clone(), den.clone())
            .to_f64()
            .unwrap_or(f64::NAN)
    }
}

/// Working precision tiers, in escalation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "bits")]
pub enum Precision {
    Native,
    DoubleDouble,
    Arbitrary(u32),
}

impl Precision {
    pub fn bits(self) -> u32 {
        match self {
            Precision::Native => f64::MANTISSA_DIGITS,
            Precision::DoubleDouble => DoubleDouble::MANTISSA_BITS,
            Precision::Arbitrary(bits) => bits,
        }
    }
}
