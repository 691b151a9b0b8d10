//! Symbolic skeleton of the large-`n1` expansion.
//!
//! Each coefficient is a linear form over the ε-dependent basis
//! `{1, ln sin(πε/2), ln cos(πε/2), c1, F⁽ᵍ⁾(ε) for g ≥ 2}` with coefficients
//! in a field `C` (exact `BigRational` or `f64`). Two independent
//! constructions are provided: the closed-form tail formulas for the
//! multi-arc series, and the re-expansion of `(m - n2) S(n1) + n2 S(n1 + 1)`
//! where `S` is the one-interval series.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::scalar::Real;

/// Coefficient field of a series skeleton.
pub trait Coeff:
    Clone
    + Debug
    + PartialEq
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn ratio(num: i64, den: i64) -> Self;
    fn from_bigint(n: &BigInt) -> Self;
    fn to_real<T: Real>(&self) -> T;
}

impl Coeff for f64 {
    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_bigint(n: &BigInt) -> Self {
        n.to_f64().unwrap_or(f64::NAN)
    }
    fn to_real<T: Real>(&self) -> T {
        T::lit(*self)
    }
}

impl Coeff for BigRational {
    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_bigint(n: &BigInt) -> Self {
        BigRational::from_integer(n.clone())
    }
    fn to_real<T: Real>(&self) -> T {
        T::from_ratio(self.numer(), self.denom())
    }
}

/// ε-dependent basis quantities appearing in the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Basis {
    One,
    /// `ln sin(πε/2)`
    LogSin,
    /// `ln cos(πε/2)`
    LogCos,
    /// `(1/12) ln 2 ± 3ζ'(-1)`
    Dyson,
    /// `F⁽ᵍ⁾(ε)`, `g ≥ 2`
    Free(u32),
}

impl std::fmt::Display for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Basis::One => f.write_str("1"),
            Basis::LogSin => f.write_str("ln sin(pi eps/2)"),
            Basis::LogCos => f.write_str("ln cos(pi eps/2)"),
            Basis::Dyson => f.write_str("c1"),
            Basis::Free(g) => write!(f, "F{g}"),
        }
    }
}

/// `Σ c_b · b` over the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearForm<C> {
    terms: BTreeMap<Basis, C>,
}

impl<C: Coeff> Default for LinearForm<C> {
    fn default() -> Self {
        Self {
            terms: BTreeMap::new(),
        }
    }
}

impl<C: Coeff> LinearForm<C> {
    pub fn term(basis: Basis, c: C) -> Self {
        let mut f = Self::default();
        f.add_term(basis, c);
        f
    }

    pub fn add_term(&mut self, basis: Basis, c: C) {
        let entry = self.terms.entry(basis).or_insert_with(C::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.terms.remove(&basis);
        }
    }

    pub fn add_form(&mut self, other: &Self, scale: &C) {
        for (b, c) in &other.terms {
            self.add_term(*b, c.clone() * scale.clone());
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Basis, &C)> {
        self.terms.iter()
    }

    pub fn get(&self, basis: Basis) -> C {
        self.terms.get(&basis).cloned().unwrap_or_else(C::zero)
    }

    /// Highest free-energy index referenced.
    pub fn max_free_energy(&self) -> u32 {
        self.terms
            .keys()
            .filter_map(|b| match b {
                Basis::Free(g) => Some(*g),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    fn without_free_above(&self, max_g: u32) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(b, _)| !matches!(b, Basis::Free(g) if *g > max_g))
                .map(|(b, c)| (*b, c.clone()))
                .collect(),
        }
    }

    pub fn evaluate<T: Real>(&self, basis: &impl Fn(Basis) -> T) -> T {
        let mut acc = T::zero();
        for (b, c) in &self.terms {
            acc += c.to_real::<T>() * basis(*b);
        }
        acc
    }
}

/// `ln_coeff · ln n1 + Σ_p powers[p] · n1^p`, with `p ≥ -order`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSkeleton<C> {
    pub log_coeff: LinearForm<C>,
    pub powers: BTreeMap<i32, LinearForm<C>>,
    pub order: u32,
}

impl<C: Coeff> SeriesSkeleton<C> {
    fn empty(order: u32) -> Self {
        Self {
            log_coeff: LinearForm::default(),
            powers: BTreeMap::new(),
            order,
        }
    }

    fn add(&mut self, power: i32, basis: Basis, c: C) {
        if power < -(self.order as i32) {
            return;
        }
        let form = self.powers.entry(power).or_default();
        form.add_term(basis, c);
        if form.is_zero() {
            self.powers.remove(&power);
        }
    }

    fn add_form(&mut self, power: i32, form: &LinearForm<C>, scale: &C) {
        if power < -(self.order as i32) {
            return;
        }
        let slot = self.powers.entry(power).or_default();
        slot.add_form(form, scale);
        if slot.is_zero() {
            self.powers.remove(&power);
        }
    }

    pub fn coefficient(&self, power: i32) -> LinearForm<C> {
        self.powers.get(&power).cloned().unwrap_or_default()
    }

    /// Drop every power below `-order`.
    pub fn truncated(&self, order: u32) -> Self {
        Self {
            log_coeff: self.log_coeff.clone(),
            powers: self
                .powers
                .iter()
                .filter(|(p, _)| **p >= -(order as i32))
                .map(|(p, f)| (*p, f.clone()))
                .collect(),
            order: order.min(self.order),
        }
    }

    /// Drop every term carrying a free energy above `max_g`.
    pub fn without_free_energies_above(&self, max_g: u32) -> Self {
        Self {
            log_coeff: self.log_coeff.without_free_above(max_g),
            powers: self
                .powers
                .iter()
                .map(|(p, f)| (*p, f.without_free_above(max_g)))
                .filter(|(_, f)| !f.is_zero())
                .collect(),
            order: self.order,
        }
    }

    pub fn max_free_energy(&self) -> u32 {
        self.powers
            .values()
            .map(LinearForm::max_free_energy)
            .max()
            .unwrap_or(0)
    }

    /// Evaluate at `n1` given the basis values.
    pub fn evaluate<T: Real>(&self, n1: &T, basis: &impl Fn(Basis) -> T) -> T {
        let mut acc = self.log_coeff.evaluate(basis) * n1.ln();
        for (p, form) in &self.powers {
            acc += form.evaluate(basis) * n1.powi(*p);
        }
        acc
    }

    /// Evaluate each power separately, highest first; the log term is
    /// reported with key `None`.
    pub fn evaluate_terms<T: Real>(
        &self,
        n1: &T,
        basis: &impl Fn(Basis) -> T,
    ) -> Vec<(Option<i32>, T)> {
        let mut out = Vec::with_capacity(self.powers.len() + 1);
        for (p, form) in self.powers.iter().rev() {
            if *p == 0 {
                out.push((None, self.log_coeff.evaluate(basis) * n1.ln()));
            }
            out.push((Some(*p), form.evaluate(basis) * n1.powi(*p)));
        }
        if !self.powers.contains_key(&0) {
            out.push((None, self.log_coeff.evaluate(basis) * n1.ln()));
        }
        out
    }
}

/// `C(n, k)` exactly.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Highest free energy needed for truncation order `order`.
pub fn free_energy_depth(order: u32) -> u32 {
    if order >= 2 {
        order / 2 + 1
    } else {
        0
    }
}

/// The multi-arc series from the closed-form tail formulas.
pub fn multi_arc_skeleton<C: Coeff>(m: u32, n2: u32, order: u32) -> SeriesSkeleton<C> {
    let mi = m as i64;
    let n2i = n2 as i64;
    let mut s = SeriesSkeleton::empty(order);
    s.log_coeff.add_term(Basis::One, C::ratio(-mi, 4));
    s.add(2, Basis::LogSin, C::ratio(mi, 1));
    s.add(1, Basis::LogSin, C::ratio(2 * n2i, 1));
    s.add(0, Basis::Dyson, C::ratio(mi, 1));
    s.add(0, Basis::LogCos, C::ratio(-mi, 4));
    s.add(0, Basis::LogSin, C::ratio(n2i, 1));
    s.add(-1, Basis::One, C::ratio(-n2i, 4));

    let mut l = 1u32;
    while 2 * l <= order {
        let p = -(2 * l as i32);
        s.add(p, Basis::Free(l + 1), C::ratio(-mi, 1));
        s.add(p, Basis::One, C::ratio(n2i, 8 * l as i64));
        for j in 1..l {
            let c = C::from_bigint(&binomial(2 * l as u64 - 1, 2 * j as u64 - 1));
            s.add(p, Basis::Free(j + 1), C::ratio(-n2i, 1) * c);
        }
        l += 1;
    }
    let mut l = 1u32;
    while 2 * l < order {
        let p = -(2 * l as i32 + 1);
        s.add(p, Basis::One, C::ratio(-n2i, 4 * (2 * l as i64 + 1)));
        for j in 1..=l {
            let c = C::from_bigint(&binomial(2 * l as u64, 2 * j as u64 - 1));
            s.add(p, Basis::Free(j + 1), C::ratio(n2i, 1) * c);
        }
        l += 1;
    }
    s
}

/// One-interval series `S(n)` through `n^{-order}`.
pub fn one_interval_skeleton<C: Coeff>(order: u32) -> SeriesSkeleton<C> {
    multi_arc_skeleton(1, 0, order)
}

/// `(m - n2) S(n1) + n2 S(n1 + 1)`, re-expanded in powers of `1/n1`.
pub fn reexpanded_skeleton<C: Coeff>(m: u32, n2: u32, order: u32) -> SeriesSkeleton<C> {
    let base = one_interval_skeleton::<C>(order);
    let mut s = SeriesSkeleton::empty(order);
    let w_small = C::ratio((m - n2) as i64, 1);
    let w_large = C::ratio(n2 as i64, 1);

    // (m - n2) S(n1)
    s.log_coeff.add_form(&base.log_coeff, &w_small);
    for (p, form) in &base.powers {
        s.add_form(*p, form, &w_small);
    }

    // n2 S(n1 + 1): (n1 + 1)^p = Σ_k C(p, k) n1^{p-k}
    s.log_coeff.add_form(&base.log_coeff, &w_large);
    for (p, form) in &base.powers {
        let mut k = 0u32;
        loop {
            let power = *p - k as i32;
            if power < -(order as i32) {
                break;
            }
            let c = general_binomial::<C>(*p, k);
            if c.is_zero() && *p >= 0 && k as i32 > *p {
                break;
            }
            s.add_form(power, form, &(w_large.clone() * c));
            k += 1;
        }
    }
    // ln(n1 + 1) = ln n1 + Σ_{k≥1} (-1)^{k+1} n1^{-k} / k
    for k in 1..=order as i64 {
        let sign = if k % 2 == 1 { 1 } else { -1 };
        s.add_form(
            -(k as i32),
            &base.log_coeff,
            &(w_large.clone() * C::ratio(sign, k)),
        );
    }
    s
}

/// Generalized binomial `C(p, k)` for integer `p` (possibly negative).
fn general_binomial<C: Coeff>(p: i32, k: u32) -> C {
    if p >= 0 {
        C::from_bigint(&binomial(p as u64, k as u64))
    } else {
        // C(-a, k) = (-1)^k C(a + k - 1, k)
        let a = (-p) as u64;
        let b = C::from_bigint(&binomial(a + k as u64 - 1, k as u64));
        if k.is_multiple_of(2) {
            b
        } else {
            -b
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::ratio(n, d)
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(13, 0), BigInt::from(1));
        assert_eq!(binomial(3, 5), BigInt::from(0));
        assert_eq!(general_binomial::<BigRational>(-2, 3), q(-4, 1));
        assert_eq!(general_binomial::<BigRational>(2, 3), q(0, 1));
    }

    #[test]
    fn closed_form_low_orders() {
        let s = multi_arc_skeleton::<BigRational>(5, 3, 4);
        assert_eq!(s.log_coeff.get(Basis::One), q(-5, 4));
        assert_eq!(s.coefficient(2).get(Basis::LogSin), q(5, 1));
        assert_eq!(s.coefficient(1).get(Basis::LogSin), q(6, 1));
        assert_eq!(s.coefficient(-1).get(Basis::One), q(-3, 4));
        // n1^-2: -m F2 + n2/8
        assert_eq!(s.coefficient(-2).get(Basis::Free(2)), q(-5, 1));
        assert_eq!(s.coefficient(-2).get(Basis::One), q(3, 8));
        // n1^-3: -n2/12 + 2 n2 F2
        assert_eq!(s.coefficient(-3).get(Basis::One), q(-3, 12));
        assert_eq!(s.coefficient(-3).get(Basis::Free(2)), q(6, 1));
        // n1^-4: -m F3 + n2/16 - 3 n2 F2
        assert_eq!(s.coefficient(-4).get(Basis::Free(3)), q(-5, 1));
        assert_eq!(s.coefficient(-4).get(Basis::One), q(3, 16));
        assert_eq!(s.coefficient(-4).get(Basis::Free(2)), q(-9, 1));
        assert_eq!(s.max_free_energy(), 3);
        assert!(s.coefficient(-5).is_zero());
    }

    #[test]
    fn reexpansion_matches_closed_form_small_case() {
        for m in 1..=4 {
            for n2 in 0..m {
                assert_eq!(
                    multi_arc_skeleton::<BigRational>(m, n2, 5),
                    reexpanded_skeleton::<BigRational>(m, n2, 5),
                    "m={m} n2={n2}"
                );
            }
        }
    }

    #[test]
    fn free_energy_filter_and_truncation() {
        let s = multi_arc_skeleton::<BigRational>(5, 2, 4);
        let f = s.without_free_energies_above(2);
        assert_eq!(f.max_free_energy(), 2);
        assert!(f.coefficient(-4).get(Basis::Free(3)).is_zero());
        assert_eq!(f.coefficient(-4).get(Basis::One), q(2, 16));
        let t = s.truncated(2);
        assert!(t.coefficient(-3).is_zero());
        assert_eq!(free_energy_depth(4), 3);
        assert_eq!(free_energy_depth(1), 0);
        assert_eq!(free_energy_depth(7), 4);
    }

    #[test]
    fn f64_and_exact_skeletons_agree() {
        let a = multi_arc_skeleton::<f64>(7, 4, 6);
        let b = multi_arc_skeleton::<BigRational>(7, 4, 6);
        for (p, form) in &b.powers {
            for (basis, c) in form.terms() {
                let want = c.numer().to_f64().unwrap() / c.denom().to_f64().unwrap();
                assert!((a.coefficient(*p).get(*basis) - want).abs() < 1e-12);
            }
        }
    }
}
