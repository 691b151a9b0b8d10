use std::cell::Cell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_traits::{FromPrimitive, One, Zero};
use rug::float::Constant;
use rug::{Float, Integer};

use super::Real;

const DEFAULT_PRECISION: u32 = 128;

thread_local! {
    static PRECISION: Cell<u32> = const { Cell::new(DEFAULT_PRECISION) };
}

/// Precision (bits) used for new [`BigReal`] values on this thread.
pub fn working_precision() -> u32 {
    PRECISION.with(Cell::get)
}

/// Runs `f` with the thread's working precision set to `bits`, restoring the
/// previous value afterwards (also on unwind).
pub fn with_precision<R>(bits: u32, f: impl FnOnce() -> R) -> R {
    struct Restore(u32);
    impl Drop for Restore {
        fn drop(&mut self) {
            PRECISION.with(|p| p.set(self.0));
        }
    }
    let _restore = Restore(PRECISION.with(|p| p.replace(bits.max(rug::float::prec_min()))));
    f()
}

/// MPFR float whose precision is taken from the thread's working precision
/// at construction time.
#[derive(Clone, PartialEq)]
pub struct BigReal(pub Float);

impl BigReal {
    pub fn new(value: Float) -> Self {
        Self(value)
    }

    pub fn inner(&self) -> &Float {
        &self.0
    }

    pub fn from_integer(i: &Integer) -> Self {
        Self(Float::with_val(working_precision(), i))
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        self.0.to_string_radix(10, Some(digits))
    }

    /// Parses a decimal literal at the working precision.
    pub fn parse(s: &str) -> Option<Self> {
        let parsed = Float::parse(s).ok()?;
        Some(Self(Float::with_val(working_precision(), parsed)))
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigReal[{}]({})", self.0.prec(), self.to_decimal(20))
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl PartialOrd for BigReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl Neg for BigReal {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

macro_rules! bin_op {
    ($tr:ident, $m:ident, $atr:ident, $am:ident) => {
        impl $tr for BigReal {
            type Output = Self;
            fn $m(self, rhs: Self) -> Self {
                Self(Float::with_val(working_precision(), (&self.0).$m(&rhs.0)))
            }
        }
        impl $atr for BigReal {
            fn $am(&mut self, rhs: Self) {
                if self.0.prec() != working_precision() {
                    self.0.set_prec(working_precision());
                }
                self.0.$am(rhs.0);
            }
        }
    };
}

bin_op!(Add, add, AddAssign, add_assign);
bin_op!(Sub, sub, SubAssign, sub_assign);
bin_op!(Mul, mul, MulAssign, mul_assign);
bin_op!(Div, div, DivAssign, div_assign);

impl Zero for BigReal {
    fn zero() -> Self {
        Self(Float::with_val(working_precision(), 0))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for BigReal {
    fn one() -> Self {
        Self(Float::with_val(working_precision(), 1))
    }
}

impl FromPrimitive for BigReal {
    fn from_i64(n: i64) -> Option<Self> {
        Some(Self(Float::with_val(working_precision(), n)))
    }
    fn from_u64(n: u64) -> Option<Self> {
        Some(Self(Float::with_val(working_precision(), n)))
    }
    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite()
            .then(|| Self(Float::with_val(working_precision(), x)))
    }
}

fn to_rug_integer(i: &BigInt) -> Integer {
    Integer::from_str_radix(&i.to_str_radix(16), 16).expect("hex digits")
}

impl Real for BigReal {
    const NAME: &'static str = "mpfr";

    fn pi() -> Self {
        Self(Float::with_val(working_precision(), Constant::Pi))
    }
    fn ln2() -> Self {
        Self(Float::with_val(working_precision(), Constant::Log2))
    }
    fn sqrt(&self) -> Self {
        Self(Float::with_val(working_precision(), self.0.sqrt_ref()))
    }
    fn ln(&self) -> Self {
        Self(Float::with_val(working_precision(), self.0.ln_ref()))
    }
    fn exp(&self) -> Self {
        Self(Float::with_val(working_precision(), self.0.exp_ref()))
    }
    fn sin(&self) -> Self {
        Self(Float::with_val(working_precision(), self.0.sin_ref()))
    }
    fn cos(&self) -> Self {
        Self(Float::with_val(working_precision(), self.0.cos_ref()))
    }
    fn tan(&self) -> Self {
        Self(Float::with_val(working_precision(), self.0.tan_ref()))
    }
    fn abs(&self) -> Self {
        Self(Float::with_val(working_precision(), self.0.abs_ref()))
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn unit_roundoff() -> f64 {
        2f64.powi(-(working_precision() as i32))
    }
    fn precision_bits() -> u32 {
        working_precision()
    }
    fn from_ratio(num: &BigInt, den: &BigInt) -> Self {
        let prec = working_precision();
        let n = Float::with_val(prec, to_rug_integer(num));
        let d = Float::with_val(prec, to_rug_integer(den));
        Self(n / d)
    }
}
