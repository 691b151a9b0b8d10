//! Large-`n` expansions of the arc determinants.
//!
//! * one interval: `ln D_n = n² ln sin(πε/2) - ¼ ln n - ¼ ln cos(πε/2) + c1
//!   - Σ_{g≥2} F⁽ᵍ⁾(ε) n^{2-2g}`, with `c1 = (1/12) ln 2 ± 3ζ'(-1)`;
//! * m arcs, in powers of `n1 = ⌊N/m⌋` at fixed `n2 = N mod m`;
//! * m arcs, leading orders rewritten in `N`.
//!
//! Truncation at order `q` keeps every power `n1^p` with `p ≥ -q`.

pub mod skeleton;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::constants::{dyson_constant, ConstantSign};
use crate::error::{Error, Result};
use crate::factorize::euclidean_split;
use crate::scalar::Real;

pub use skeleton::{
    binomial, free_energy_depth, multi_arc_skeleton, one_interval_skeleton, reexpanded_skeleton,
    Basis, Coeff, LinearForm, SeriesSkeleton,
};

/// Highest order with a closed-form free energy.
pub const CLOSED_FORM_MAX_G: u32 = 3;

/// Above this ε the tails are dominated by powers of `tan(πε/2)`.
pub const EPSILON_WARN: f64 = 0.95;

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok(())
}

/// Closed-form free energy `F⁽ᵍ⁾(ε)` for `g ≤ 3`, in working format `T`.
pub fn free_energy_in<T: Real>(g: u32, epsilon: f64) -> Result<T> {
    check_epsilon(epsilon)?;
    let half = T::pi() * T::lit(epsilon) / T::from_int(2);
    let q = |n: i64, d: i64| T::from_int(n) / T::from_int(d);
    Ok(match g {
        0 => T::ln2() - half.sin().ln(),
        1 => half.cos().ln() / T::from_int(4),
        2 => {
            let t2 = half.tan().powi(2);
            q(1, 64) - q(1, 32) * t2
        }
        3 => {
            let t2 = half.tan().powi(2);
            q(-1, 256) - q(1, 128) * t2.clone() - q(5, 128) * t2.clone() * t2
        }
        _ => {
            return Err(Error::UnavailableOrder {
                g,
                reason: format!(
                    "closed forms exist only for g <= {CLOSED_FORM_MAX_G}; fit higher orders numerically"
                ),
            })
        }
    })
}

pub fn free_energy(g: u32, epsilon: f64) -> Result<f64> {
    free_energy_in::<f64>(g, epsilon)
}

/// A numerically fitted free energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedValue {
    pub estimate: f64,
    pub uncertainty: f64,
}

/// Closed-form free energies plus fitted values for `g > 3`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FreeEnergyTable {
    fitted: BTreeMap<(u32, u64), FittedValue>,
}

impl FreeEnergyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn closed_form_max_g(&self) -> u32 {
        CLOSED_FORM_MAX_G
    }

    pub fn insert_fitted(&mut self, g: u32, epsilon: f64, value: FittedValue) -> Result<()> {
        if g <= CLOSED_FORM_MAX_G {
            return Err(Error::InvalidArgument(format!(
                "F^({g}) has a closed form; only g > {CLOSED_FORM_MAX_G} can be fitted"
            )));
        }
        self.fitted.insert((g, epsilon.to_bits()), value);
        Ok(())
    }

    pub fn fitted(&self, g: u32, epsilon: f64) -> Option<FittedValue> {
        self.fitted.get(&(g, epsilon.to_bits())).copied()
    }

    /// Highest `g` with every `F⁽ʰ⁾`, `h ≤ g`, available at this ε.
    pub fn available_max_g(&self, epsilon: f64) -> u32 {
        let mut g = CLOSED_FORM_MAX_G;
        while self.fitted(g + 1, epsilon).is_some() {
            g += 1;
        }
        g
    }

    pub fn value_in<T: Real>(&self, g: u32, epsilon: f64) -> Result<T> {
        if g <= CLOSED_FORM_MAX_G {
            return free_energy_in::<T>(g, epsilon);
        }
        self.fitted(g, epsilon)
            .map(|v| T::lit(v.estimate))
            .ok_or_else(|| Error::UnavailableOrder {
                g,
                reason: format!("no fitted value of F^({g}) at epsilon={epsilon}"),
            })
    }

    pub fn value(&self, g: u32, epsilon: f64) -> Result<f64> {
        self.value_in::<f64>(g, epsilon)
    }
}

/// How to truncate a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesOptions {
    /// Keep powers `n1^p` with `p ≥ -order`.
    pub order: u32,
    /// Drop terms carrying `F⁽ᵍ⁾` with `g` above this cap.
    pub max_free_energy: Option<u32>,
    pub sign: ConstantSign,
}

impl SeriesOptions {
    pub fn new(order: u32) -> Self {
        Self {
            order,
            max_free_energy: None,
            sign: ConstantSign::default(),
        }
    }

    pub fn with_sign(mut self, sign: ConstantSign) -> Self {
        self.sign = sign;
        self
    }

    pub fn with_max_free_energy(mut self, g: u32) -> Self {
        self.max_free_energy = Some(g);
        self
    }
}

type SkeletonKey = (u32, u32, u32);

fn cached_skeleton(m: u32, n2: u32, order: u32) -> Arc<SeriesSkeleton<BigRational>> {
    static CACHE: OnceLock<Mutex<HashMap<SkeletonKey, Arc<SeriesSkeleton<BigRational>>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut guard = cache.lock().unwrap_or_else(|p| p.into_inner());
    guard
        .entry((m, n2, order))
        .or_insert_with(|| Arc::new(multi_arc_skeleton(m, n2, order)))
        .clone()
}

/// A truncated expansion bound to `(m, n2, ε)`.
#[derive(Debug, Clone)]
pub struct AsymptoticSeries {
    pub m: u32,
    pub n2: u32,
    pub epsilon: f64,
    pub options: SeriesOptions,
    /// Multiplier of `ln n1`.
    pub ln_coefficient: f64,
    /// Numerical coefficient of `n1^p`.
    pub coefficients: BTreeMap<i32, f64>,
    skeleton: Arc<SeriesSkeleton<BigRational>>,
    fitted: BTreeMap<u32, f64>,
}

impl AsymptoticSeries {
    pub fn build(
        m: u32,
        n2: u32,
        epsilon: f64,
        options: SeriesOptions,
        table: &FreeEnergyTable,
    ) -> Result<Self> {
        check_epsilon(epsilon)?;
        if m == 0 || n2 >= m {
            return Err(Error::InvalidArgument(format!(
                "need m >= 1 and 0 <= n2 < m, got m={m}, n2={n2}"
            )));
        }
        if epsilon > EPSILON_WARN {
            log::warn!(
                "epsilon={epsilon} > {EPSILON_WARN}: tan(pi eps/2) is large and the tail terms blow up"
            );
        }
        let full = cached_skeleton(m, n2, options.order);
        let skeleton = match options.max_free_energy {
            Some(g) => Arc::new(full.without_free_energies_above(g)),
            None => full,
        };
        let need = skeleton.max_free_energy();
        let have = table.available_max_g(epsilon);
        if need > have {
            return Err(Error::UnavailableOrder {
                g: need,
                reason: format!(
                    "order {} needs F^({need}) but only g <= {have} is available at epsilon={epsilon}",
                    options.order
                ),
            });
        }
        let fitted = (CLOSED_FORM_MAX_G + 1..=need)
            .map(|g| Ok((g, table.value(g, epsilon)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let mut series = Self {
            m,
            n2,
            epsilon,
            options,
            ln_coefficient: 0.0,
            coefficients: BTreeMap::new(),
            skeleton,
            fitted,
        };
        let basis = series.basis_values::<f64>();
        series.ln_coefficient = series.skeleton.log_coeff.evaluate(&basis);
        series.coefficients = series
            .skeleton
            .powers
            .iter()
            .map(|(p, f)| (*p, f.evaluate(&basis)))
            .collect();
        Ok(series)
    }

    pub fn skeleton(&self) -> &SeriesSkeleton<BigRational> {
        &self.skeleton
    }

    fn basis_values<T: Real>(&self) -> impl Fn(Basis) -> T {
        let half = T::pi() * T::lit(self.epsilon) / T::from_int(2);
        let log_sin = half.sin().ln();
        let log_cos = half.cos().ln();
        let dyson = dyson_constant::<T>(self.options.sign);
        let max_g = self.skeleton.max_free_energy();
        let free: Vec<T> = (0..=max_g)
            .map(|g| {
                if g <= CLOSED_FORM_MAX_G {
                    free_energy_in::<T>(g, self.epsilon).expect("validated epsilon")
                } else {
                    T::lit(self.fitted[&g])
                }
            })
            .collect();
        move |b| match b {
            Basis::One => T::one(),
            Basis::LogSin => log_sin.clone(),
            Basis::LogCos => log_cos.clone(),
            Basis::Dyson => dyson.clone(),
            Basis::Free(g) => free[g as usize].clone(),
        }
    }

    /// Value at `n1` in double precision.
    pub fn evaluate(&self, n1: usize) -> f64 {
        let x = n1 as f64;
        let mut acc = self.ln_coefficient * x.ln();
        for (p, c) in &self.coefficients {
            acc += c * x.powi(*p);
        }
        acc
    }

    /// Value at `n1`, with every constant evaluated in `T`.
    pub fn evaluate_in<T: Real>(&self, n1: usize) -> T {
        let basis = self.basis_values::<T>();
        self.skeleton.evaluate(&T::from_int(n1 as i64), &basis)
    }

    /// Values at several `n1`, sharing the constant evaluation.
    pub fn evaluate_many_in<T: Real>(&self, n1: &[usize]) -> Vec<T> {
        let basis = self.basis_values::<T>();
        n1.iter()
            .map(|&n| self.skeleton.evaluate(&T::from_int(n as i64), &basis))
            .collect()
    }

    /// Individual terms at `n1`, highest power first.
    pub fn terms(&self, n1: usize) -> Vec<SeriesTerm> {
        let basis = self.basis_values::<f64>();
        self.skeleton
            .evaluate_terms(&(n1 as f64), &basis)
            .into_iter()
            .map(|(power, value)| SeriesTerm {
                label: match power {
                    None => "ln n1".to_string(),
                    Some(0) => "n1^0".to_string(),
                    Some(p) => format!("n1^{p}"),
                },
                power,
                value,
            })
            .collect()
    }
}

/// One evaluated term of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub label: String,
    /// `None` for the `ln n1` term.
    pub power: Option<i32>,
    pub value: f64,
}

/// Truncation order of the one-interval series keeping `F⁽ᵍ⁾` for `g ≤ g_max`.
fn one_interval_order(g_max: u32) -> u32 {
    if g_max >= 2 {
        2 * g_max - 2
    } else {
        0
    }
}

/// One-interval series at `n`, keeping `F⁽ᵍ⁾` for `2 ≤ g ≤ g_max`.
pub fn one_interval_series(
    epsilon: f64,
    g_max: u32,
    sign: ConstantSign,
    table: &FreeEnergyTable,
) -> Result<AsymptoticSeries> {
    AsymptoticSeries::build(
        1,
        0,
        epsilon,
        SeriesOptions::new(one_interval_order(g_max)).with_sign(sign),
        table,
    )
}

pub fn one_interval_expansion(
    n: usize,
    epsilon: f64,
    g_max: u32,
    sign: ConstantSign,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    Ok(one_interval_series(epsilon, g_max, sign, &FreeEnergyTable::default())?.evaluate(n))
}

/// Multi-arc series for the split of `N`.
pub fn multi_arc_series(
    m: u32,
    n: usize,
    epsilon: f64,
    options: SeriesOptions,
    table: &FreeEnergyTable,
) -> Result<(AsymptoticSeries, usize)> {
    if m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    let split = euclidean_split(n, m);
    if split.n1 == 0 {
        return Err(Error::InvalidArgument(format!(
            "expansion needs n1 = floor(N/m) >= 1 (N={n}, m={m}); the m > N case is exact"
        )));
    }
    let series = AsymptoticSeries::build(m, split.n2 as u32, epsilon, options, table)?;
    Ok((series, split.n1))
}

pub fn multi_arc_expansion(
    m: u32,
    n: usize,
    epsilon: f64,
    order: u32,
    sign: ConstantSign,
) -> Result<f64> {
    let (series, n1) = multi_arc_series(
        m,
        n,
        epsilon,
        SeriesOptions::new(order).with_sign(sign),
        &FreeEnergyTable::default(),
    )?;
    Ok(series.evaluate(n1))
}

/// Expansion through `O(1)` written in `N`:
/// `(N²/m) L - (m/4) ln N + (m/4) ln m + m c1 - (m/4) ln cos(πε/2) + n2 (m - n2)/m · L`
/// with `L = ln sin(πε/2)`.
pub fn n_form_expansion(m: u32, n: usize, epsilon: f64, sign: ConstantSign) -> Result<f64> {
    n_form_expansion_in::<f64>(m, n, epsilon, sign)
}

pub fn n_form_expansion_in<T: Real>(
    m: u32,
    n: usize,
    epsilon: f64,
    sign: ConstantSign,
) -> Result<T> {
    check_epsilon(epsilon)?;
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "need m >= 1 and N >= 1, got m={m}, N={n}"
        )));
    }
    let split = euclidean_split(n, m);
    let half = T::pi() * T::lit(epsilon) / T::from_int(2);
    let l = half.sin().ln();
    let mt = T::from_int(m as i64);
    let nt = T::from_int(n as i64);
    let quarter_m = mt.clone() / T::from_int(4);
    let n2 = split.n2 as i64;
    Ok(
        nt.clone() * nt.clone() / mt.clone() * l.clone() - quarter_m.clone() * nt.ln()
            + quarter_m.clone() * mt.ln()
            + mt.clone() * dyson_constant::<T>(sign)
            - quarter_m * half.cos().ln()
            + T::from_int(n2 * (m as i64 - n2)) / mt * l,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ZETA_PRIME_MINUS_ONE;
    use crate::scalar::{with_precision, BigReal};
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn free_energy_examples() {
        assert!((free_energy(3, 0.5).unwrap() + 13.0 / 256.0).abs() < 1e-15);
        assert!((free_energy(1, 0.5).unwrap() + LN_2 / 8.0).abs() < 1e-15);
        assert!((free_energy(2, 0.5).unwrap() + 1.0 / 64.0).abs() < 1e-15);
        assert!((free_energy(0, 0.5).unwrap() - 1.5 * LN_2).abs() < 1e-15);
        assert!(matches!(
            free_energy(4, 0.5),
            Err(Error::UnavailableOrder { g: 4, .. })
        ));
        assert!(free_energy(2, 1.0).is_err());
    }

    #[test]
    fn free_energy_table_slots() {
        let mut t = FreeEnergyTable::new();
        assert_eq!(t.available_max_g(0.3), 3);
        assert!(t
            .insert_fitted(
                3,
                0.3,
                FittedValue {
                    estimate: 0.0,
                    uncertainty: 0.0
                }
            )
            .is_err());
        t.insert_fitted(
            4,
            0.3,
            FittedValue {
                estimate: -0.01,
                uncertainty: 1e-6,
            },
        )
        .unwrap();
        assert_eq!(t.available_max_g(0.3), 4);
        assert_eq!(t.available_max_g(0.4), 3);
        assert_eq!(t.value(4, 0.3).unwrap(), -0.01);
        assert!(t.value(4, 0.4).is_err());
    }

    #[test]
    fn one_interval_order_zero_closed_form() {
        let n = 37usize;
        let eps = 0.3;
        let h = PI * eps / 2.0;
        let c1 = LN_2 / 12.0 + 3.0 * ZETA_PRIME_MINUS_ONE;
        let want =
            (n * n) as f64 * h.sin().ln() - 0.25 * (n as f64).ln() - 0.25 * h.cos().ln() + c1;
        let got = one_interval_expansion(n, eps, 1, ConstantSign::Plus).unwrap();
        assert!((got - want).abs() < 1e-10 * want.abs());
        let minus = one_interval_expansion(n, eps, 1, ConstantSign::Minus).unwrap();
        assert!((got - minus - 6.0 * ZETA_PRIME_MINUS_ONE).abs() < 1e-9);
        // dominant term at ε = 1/2
        let big = one_interval_expansion(1000, 0.5, 1, ConstantSign::Plus).unwrap();
        assert!((big / (-(1e6) / 2.0 * LN_2) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn one_interval_with_free_energies() {
        let n = 20usize;
        let eps = 0.4;
        let base = one_interval_expansion(n, eps, 1, ConstantSign::Plus).unwrap();
        let with3 = one_interval_expansion(n, eps, 3, ConstantSign::Plus).unwrap();
        let f2 = free_energy(2, eps).unwrap();
        let f3 = free_energy(3, eps).unwrap();
        let want = base - f2 / 400.0 - f3 / 160000.0;
        assert!((with3 - want).abs() < 1e-10);
        assert!(matches!(
            one_interval_expansion(n, eps, 4, ConstantSign::Plus),
            Err(Error::UnavailableOrder { g: 4, .. })
        ));
    }

    #[test]
    fn single_arc_multi_matches_one_interval() {
        for order in [0u32, 2, 4] {
            let g_max = free_energy_depth(order).max(1);
            let a = multi_arc_expansion(1, 50, 0.45, order, ConstantSign::Plus).unwrap();
            let b = one_interval_expansion(50, 0.45, g_max, ConstantSign::Plus).unwrap();
            assert!((a - b).abs() < 1e-10 * a.abs(), "order {order}");
        }
    }

    #[test]
    fn rejects_zero_quotient_and_deep_orders() {
        assert!(multi_arc_expansion(7, 4, 0.4, 2, ConstantSign::Plus).is_err());
        assert!(matches!(
            multi_arc_expansion(5, 97, 0.5, 6, ConstantSign::Plus),
            Err(Error::UnavailableOrder { g: 4, .. })
        ));
    }

    #[test]
    fn leading_two_orders_match_n_form() {
        // N²/m L - (m/4) ln N after substituting N = n1 m + n2
        let (m, n, eps) = (5u32, 97usize, 0.5);
        let (series, n1) = multi_arc_series(
            m,
            n,
            eps,
            SeriesOptions::new(0),
            &FreeEnergyTable::default(),
        )
        .unwrap();
        let l = (PI * eps / 2.0).sin().ln();
        let n2 = (n % m as usize) as f64;
        let quad = series.coefficients[&2] * (n1 * n1) as f64 + series.coefficients[&1] * n1 as f64;
        let want = (n * n) as f64 / m as f64 * l - n2 * n2 / m as f64 * l;
        assert!((quad - want).abs() < 1e-9);
        assert_eq!(series.ln_coefficient, -(m as f64) / 4.0);
    }

    #[test]
    fn n_form_special_cases() {
        // m = 1: identical to the order-0 one-interval series
        let a = n_form_expansion(1, 40, 0.3, ConstantSign::Plus).unwrap();
        let b = one_interval_expansion(40, 0.3, 1, ConstantSign::Plus).unwrap();
        assert!((a - b).abs() < 1e-10 * a.abs());
        // N divisible by m: no remainder term, equal to the order-0 n1-form
        let a = n_form_expansion(5, 100, 0.5, ConstantSign::Plus).unwrap();
        let b = multi_arc_expansion(5, 100, 0.5, 0, ConstantSign::Plus).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn n_form_and_n1_form_converge() {
        let mut prev = f64::INFINITY;
        for n in [53usize, 103, 203, 403] {
            let a = n_form_expansion(5, n, 0.5, ConstantSign::Plus).unwrap();
            let b = multi_arc_expansion(5, n, 0.5, 4, ConstantSign::Plus).unwrap();
            let d = (a - b).abs();
            assert!(d < prev, "N={n}");
            assert!(d * n as f64 <= 5.0, "N={n}: {d}");
            prev = d;
        }
    }

    #[test]
    fn high_precision_evaluation_agrees() {
        let (series, n1) = multi_arc_series(
            5,
            97,
            0.3,
            SeriesOptions::new(5),
            &FreeEnergyTable::default(),
        )
        .unwrap();
        let lo = series.evaluate(n1);
        let hi = with_precision(200, || series.evaluate_in::<BigReal>(n1).to_f64());
        assert!((lo - hi).abs() < 1e-11 * hi.abs());
        let sum: f64 = series.terms(n1).iter().map(|t| t.value).sum();
        assert!((sum - hi).abs() < 1e-11 * hi.abs());
    }

    #[test]
    fn leading_coefficient_derivative_positive() {
        // d/dε ln sin(πε/2) = (π/2) cot(πε/2) > 0
        for eps in [0.05, 0.3, 0.7, 0.95] {
            let h = 1e-6;
            let f = |e: f64| {
                multi_arc_series(3, 90, e, SeriesOptions::new(0), &FreeEnergyTable::default())
                    .unwrap()
                    .0
                    .coefficients[&2]
            };
            let d = (f(eps + h) - f(eps - h)) / (2.0 * h);
            let want = 3.0 * PI / 2.0 / (PI * eps / 2.0).tan();
            assert!(d > 0.0 && (d - want).abs() < 1e-5 * want);
        }
    }
}
