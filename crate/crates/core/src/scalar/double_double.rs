use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};

use super::Real;

/// Unevaluated sum `hi + lo` of two doubles with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

const PI: DoubleDouble = DoubleDouble::new(std::f64::consts::PI, 1.2246467991473532e-16);
const TWO_PI: DoubleDouble = DoubleDouble::new(std::f64::consts::TAU, 2.4492935982947064e-16);
const HALF_PI: DoubleDouble = DoubleDouble::new(std::f64::consts::FRAC_PI_2, 6.123233995736766e-17);
const LN_2: DoubleDouble = DoubleDouble::new(std::f64::consts::LN_2, 2.3190468138462996e-17);

const TAYLOR_CUTOFF: f64 = 1e-34;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const MANTISSA_BITS: u32 = 106;

    pub const fn new(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Self { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        Self::renorm(p, e + self.lo * b)
    }

    /// Exact scaling by a power of two.
    fn ldexp(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        Self::new(self.hi * s, self.lo * s)
    }

    fn round_hi(self) -> f64 {
        let r = self.hi.round();
        if r == self.hi {
            // hi already integral; lo decides
            r + self.lo.round()
        } else {
            r
        }
    }

    fn sin_cos_taylor(t: Self) -> (Self, Self) {
        let t2 = t * t;
        let mut sin = t;
        let mut term = t;
        let mut k = 1.0;
        loop {
            term = -(term * t2) / Self::from_f64((k + 1.0) * (k + 2.0));
            sin += term;
            k += 2.0;
            if term.hi.abs() < TAYLOR_CUTOFF {
                break;
            }
        }
        let mut cos = Self::one();
        let mut term = Self::one();
        let mut k = 0.0;
        loop {
            term = -(term * t2) / Self::from_f64((k + 1.0) * (k + 2.0));
            cos += term;
            k += 2.0;
            if term.hi.abs() < TAYLOR_CUTOFF {
                break;
            }
        }
        (sin, cos)
    }

    fn sin_cos(self) -> (Self, Self) {
        if self.hi == 0.0 {
            return (Self::zero(), Self::one());
        }
        let k = (self / TWO_PI).round_hi();
        let r = self - TWO_PI.mul_f64(k);
        let j = (r / HALF_PI).round_hi();
        let t = r - HALF_PI.mul_f64(j);
        let (s, c) = Self::sin_cos_taylor(t);
        match (j as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DoubleDouble({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.hi + self.lo)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            ord => Some(ord),
        }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.hi, -self.lo)
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Self::renorm(s, e + f)
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        Self::renorm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        Self::renorm(q1, q2) + Self::from_f64(q3)
    }
}

macro_rules! assign_op {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for DoubleDouble {
            fn $m(&mut self, rhs: Self) {
                *self = *self $op rhs;
            }
        }
    };
}
assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);
assign_op!(DivAssign, div_assign, /);

impl Zero for DoubleDouble {
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl FromPrimitive for DoubleDouble {
    fn from_i64(n: i64) -> Option<Self> {
        let hi = n as f64;
        let lo = (n - hi as i64) as f64;
        Some(Self::renorm(hi, lo))
    }
    fn from_u64(n: u64) -> Option<Self> {
        let hi = n as f64;
        let lo = (n as i128 - hi as i128) as f64;
        Some(Self::renorm(hi, lo))
    }
    fn from_f64(x: f64) -> Option<Self> {
        Some(Self::from_f64(x))
    }
}

impl Real for DoubleDouble {
    const NAME: &'static str = "double-double";

    fn pi() -> Self {
        PI
    }

    fn ln2() -> Self {
        LN_2
    }

    fn sqrt(&self) -> Self {
        if self.hi <= 0.0 {
            return Self::from_f64(if self.hi == 0.0 { 0.0 } else { f64::NAN });
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let ax_dd = Self::from_f64(ax);
        let diff = (*self - ax_dd * ax_dd).hi;
        let (s, e) = two_sum(ax, diff * x * 0.5);
        Self::renorm(s, e)
    }

    fn exp(&self) -> Self {
        if self.hi > 709.0 {
            return Self::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Self::zero();
        }
        const SQUARINGS: i32 = 10;
        let k = (self.hi / LN_2.hi).round();
        let r = (*self - LN_2.mul_f64(k)).ldexp(-SQUARINGS);
        // expm1 of the reduced argument
        let mut s = r;
        let mut term = r;
        let mut n = 1.0;
        loop {
            n += 1.0;
            term = term * r / Self::from_f64(n);
            s += term;
            if term.hi.abs() < TAYLOR_CUTOFF * 1e-3 {
                break;
            }
        }
        for _ in 0..SQUARINGS {
            s = s.ldexp(1) + s * s;
        }
        (s + Self::one()).ldexp(k as i32)
    }

    fn ln(&self) -> Self {
        if self.hi <= 0.0 {
            return Self::from_f64(if self.hi == 0.0 {
                f64::NEG_INFINITY
            } else {
                f64::NAN
            });
        }
        let x = Self::from_f64(self.hi.ln());
        // one Newton step on exp(x) = a doubles the accurate digits
        x + *self * (-x).exp() - Self::one()
    }

    fn sin(&self) -> Self {
        self.sin_cos().0
    }

    fn cos(&self) -> Self {
        self.sin_cos().1
    }

    fn tan(&self) -> Self {
        let (s, c) = self.sin_cos();
        s / c
    }

    fn abs(&self) -> Self {
        if self.hi < 0.0 {
            -*self
        } else {
            *self
        }
    }

    fn to_f64(&self) -> f64 {
        self.hi + self.lo
    }

    fn unit_roundoff() -> f64 {
        2f64.powi(-(Self::MANTISSA_BITS as i32))
    }

    fn precision_bits() -> u32 {
        Self::MANTISSA_BITS
    }

    fn from_ratio(num: &BigInt, den: &BigInt) -> Self {
        let r = BigRational::new(num.clone(), den.clone());
        let hi = r.to_f64().unwrap_or(f64::NAN);
        let Some(hi_exact) = BigRational::from_float(hi) else {
            return Self::from_f64(hi);
        };
        let lo = (r - hi_exact).to_f64().unwrap_or(0.0);
        Self::renorm(hi, lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{with_precision, BigReal};

    /// Compare against MPFR at 200 bits.
    fn check(x: f64, f: impl Fn(DoubleDouble) -> DoubleDouble, g: impl Fn(BigReal) -> BigReal) {
        let got = f(DoubleDouble::from_f64(x));
        with_precision(200, || {
            let want = g(BigReal::lit(x));
            let err = (BigReal::lit(got.hi) + BigReal::lit(got.lo) - want.clone()).abs();
            let scale = if want.abs() > BigReal::one() {
                want.abs()
            } else {
                BigReal::one()
            };
            let rel = (err / scale).to_f64();
            assert!(rel < 1e-30, "x={x}: relative error {rel:e}");
        });
    }

    #[test]
    fn transcendental_functions_reach_double_double_accuracy() {
        for &x in &[0.1, 0.5, 1.0, 2.5, 7.3, 100.25, 628.3] {
            check(x, |v| v.sin(), |v| v.sin());
            check(x, |v| v.cos(), |v| v.cos());
            check(x, |v| v.ln(), |v| v.ln());
        }
        for &x in &[-30.0, -1.5, 0.001, 0.7, 3.0, 50.0] {
            check(x, |v| v.exp(), |v| v.exp());
        }
        for &x in &[0.2, 2.0, 1e10] {
            check(x, |v| v.sqrt(), |v| v.sqrt());
        }
        check(0.4, |v| v.tan(), |v| v.tan());
    }

    #[test]
    fn arithmetic_is_exact_on_split_values() {
        let a = DoubleDouble::new(1.0, 1e-20);
        let b = DoubleDouble::new(1.0, -1e-20);
        let d = a - b;
        assert!((d.to_f64() - 2e-20).abs() < 1e-35);
        let q = DoubleDouble::one() / DoubleDouble::from_f64(3.0);
        let back = q * DoubleDouble::from_f64(3.0) - DoubleDouble::one();
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn ordering_uses_low_word() {
        let a = DoubleDouble::new(1.0, 1e-20);
        let b = DoubleDouble::new(1.0, 2e-20);
        assert!(a < b);
        assert!(-b < -a);
    }
}
