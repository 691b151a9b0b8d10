//! Residual scans, free-energy fitting and constant-sign resolution against
//! exact determinants.

pub mod emit;

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    free_energy, one_interval_series, AsymptoticSeries, FreeEnergyTable, SeriesOptions,
    CLOSED_FORM_MAX_G,
};
use crate::constants::{sign_gap, ConstantSign};
use crate::error::{Error, Result};
use crate::factorize::{euclidean_split, log_det_factorized};
use crate::logdet::log_det_prefix_high;
use crate::scalar::{with_precision, BigReal, DoubleDouble, Real};
use crate::symbol::ArcConfiguration;

pub use emit::{base_metadata, emit_results, fmt_f64, write_columns, Format, Metadata, Tabular};

/// One `(m, N, ε)` point of a residual scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub m: u32,
    #[serde(rename = "N")]
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub epsilon: f64,
    pub exact_logdet: f64,
    pub truncated_expansion: f64,
    /// `exact_logdet - truncated_expansion`.
    pub residual: f64,
    /// `residual · n1^order / m`.
    pub scaled_residual: f64,
    pub truncation_order: u32,
}

impl Tabular for ResidualRecord {
    const HEADER: &'static [&'static str] = &[
        "m",
        "N",
        "n1",
        "n2",
        "epsilon",
        "exact_logdet",
        "truncated_expansion",
        "residual",
        "scaled_residual",
        "truncation_order",
    ];

    fn row(&self) -> Vec<String> {
        vec![
            self.m.to_string(),
            self.n.to_string(),
            self.n1.to_string(),
            self.n2.to_string(),
            fmt_f64(self.epsilon),
            fmt_f64(self.exact_logdet),
            fmt_f64(self.truncated_expansion),
            fmt_f64(self.residual),
            fmt_f64(self.scaled_residual),
            self.truncation_order.to_string(),
        ]
    }
}

/// One Monte Carlo estimate with its exact counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub m: u32,
    pub epsilon: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    pub exact_logdet: f64,
}

impl Tabular for McRecord {
    const HEADER: &'static [&'static str] = &[
        "N",
        "m",
        "epsilon",
        "estimate",
        "stderr",
        "samples",
        "seed",
        "exact_logdet",
    ];

    fn row(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.m.to_string(),
            fmt_f64(self.epsilon),
            fmt_f64(self.estimate),
            fmt_f64(self.stderr),
            self.samples.to_string(),
            self.seed.to_string(),
            fmt_f64(self.exact_logdet),
        ]
    }
}

/// Truncation used by a residual scan of even order `2l`.
///
/// All powers down to `n1^{-2l}` are kept, but the free energy
/// `F⁽ˡ⁺¹⁾` that first enters at that power is left out, so the scaled
/// residual `residual · n1^{2l} / m` isolates it.
pub fn scan_options(order: u32, sign: ConstantSign) -> Result<SeriesOptions> {
    if order < 2 || !order.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "residual scans use an even truncation order >= 2, got {order}"
        )));
    }
    Ok(SeriesOptions::new(order)
        .with_sign(sign)
        .with_max_free_energy(order / 2))
}

/// The configuration of the reference residual plot: five arcs,
/// `N ∈ [90, 100]`, order 4.
pub const FIGURE2_M: u32 = 5;
pub const FIGURE2_N: RangeInclusive<usize> = 90..=100;
pub const FIGURE2_ORDER: u32 = 4;

/// `ε ∈ [0.1, 0.6]` in steps of 0.05.
pub fn figure2_epsilon_grid() -> Vec<f64> {
    (0..=10).map(|i| (10 + 5 * i) as f64 / 100.0).collect()
}

/// Exact log-determinant minus truncated expansion over a grid.
///
/// Records are sorted by `(m, ε, N)` regardless of evaluation order.
pub fn residual_scan(
    m: u32,
    epsilon_grid: &[f64],
    n_range: RangeInclusive<usize>,
    truncation_order: u32,
    sign: ConstantSign,
) -> Result<Vec<ResidualRecord>> {
    let options = scan_options(truncation_order, sign)?;
    if m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    if euclidean_split(*n_range.start(), m).n1 < 2 {
        return Err(Error::InvalidArgument(format!(
            "every N in the scan needs floor(N/m) >= 2; N={} is too small for m={m}",
            n_range.start()
        )));
    }
    let table = FreeEnergyTable::default();
    let points: Vec<(f64, usize)> = epsilon_grid
        .iter()
        .flat_map(|&e| n_range.clone().map(move |n| (e, n)))
        .collect();
    let mut records = points
        .par_iter()
        .map(|&(epsilon, n)| {
            let config = ArcConfiguration::new(m, epsilon)?;
            let split = euclidean_split(n, m);
            let exact = log_det_factorized(&config, n)?.value;
            let series = AsymptoticSeries::build(m, split.n2 as u32, epsilon, options, &table)?;
            let truncated = series.evaluate_in::<DoubleDouble>(split.n1).to_f64();
            let residual = exact - truncated;
            Ok(ResidualRecord {
                m,
                n,
                n1: split.n1,
                n2: split.n2,
                epsilon,
                exact_logdet: exact,
                truncated_expansion: truncated,
                residual,
                scaled_residual: residual * (split.n1 as f64).powi(truncation_order as i32)
                    / m as f64,
                truncation_order,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    sort_records(&mut records);
    Ok(records)
}

pub fn sort_records(records: &mut [ResidualRecord]) {
    records.sort_by(|a, b| {
        a.m.cmp(&b.m)
            .then(a.epsilon.total_cmp(&b.epsilon))
            .then(a.n.cmp(&b.n))
    });
}

/// Records keyed by `n2`, each group in scan order.
pub fn group_by_n2(records: &[ResidualRecord]) -> BTreeMap<usize, Vec<&ResidualRecord>> {
    let mut groups: BTreeMap<usize, Vec<&ResidualRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.n2).or_default().push(r);
    }
    groups
}

/// Plot data for a scan: `<stem>_n2_<k>.dat` with `ε scaled_residual` per
/// `n2` group, plus `<stem>_reference.dat` with the free energy the scaled
/// residual isolates, sampled on the ε grid.
pub fn write_plot_data(
    records: &[ResidualRecord],
    dir: &Path,
    stem: &str,
    metadata: &Metadata,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (n2, group) in group_by_n2(records) {
        let path = dir.join(format!("{stem}_n2_{n2}.dat"));
        written.push(write_columns(
            &path,
            &["epsilon", "scaled_residual"],
            group.iter().map(|r| (r.epsilon, r.scaled_residual)),
            metadata,
        )?);
    }
    let mut grid: Vec<(f64, u32)> = records
        .iter()
        .map(|r| (r.epsilon, r.truncation_order))
        .collect();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    grid.dedup_by(|a, b| a.0 == b.0);
    if let Some(&(_, order)) = grid.first() {
        let g = order / 2 + 1;
        let path = dir.join(format!("{stem}_reference.dat"));
        let rows = grid
            .iter()
            .map(|&(e, _)| Ok((e, free_energy(g, e)?)))
            .collect::<Result<Vec<_>>>()?;
        let header = format!("F{g}(epsilon)");
        written.push(write_columns(&path, &["epsilon", &header], rows, metadata)?);
    }
    Ok(written)
}

/// `ln D_k(1_{[-πε, πε]})` for `k ≤ n_max` with absolute error below `target`.
pub struct ExactPrefix {
    pub epsilon: f64,
    pub values: Vec<BigReal>,
    pub bits: u32,
}

impl ExactPrefix {
    pub fn compute(epsilon: f64, n_max: usize, target: f64) -> Result<Self> {
        let config = ArcConfiguration::new(1, epsilon)?;
        let (values, bits) = log_det_prefix_high(&config, n_max, target)?;
        Ok(Self {
            epsilon,
            values,
            bits,
        })
    }

    pub fn one_interval(&self, n: usize) -> &BigReal {
        &self.values[n]
    }

    /// `ln D_N(m, ε)` via the factorization; call inside `with_precision`.
    pub fn multi_arc(&self, m: u32, n: usize) -> BigReal {
        let s = euclidean_split(n, m);
        let mut v = BigReal::from_int((m as usize - s.n2) as i64) * self.values[s.n1].clone();
        if s.n2 > 0 {
            v += BigReal::from_int(s.n2 as i64) * self.values[s.n1 + 1].clone();
        }
        v
    }
}

/// A numerically extrapolated free energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub g: u32,
    pub epsilon: f64,
    pub estimate: f64,
    pub uncertainty: f64,
    pub n_window: (usize, usize),
    pub precision_bits: u32,
}

/// Maximum Richardson depth.
pub const RICHARDSON_DEPTH: usize = 4;

/// Neville extrapolation to `h = 0` of `(h_i, y_i)`; returns the whole
/// diagonal `P_{0..k}(0)`, `k = 0..len`.
pub fn neville_to_zero<T: Real>(h: &[T], y: &[T]) -> Vec<T> {
    let n = h.len();
    let mut p: Vec<T> = y.to_vec();
    let mut diag = vec![p[0].clone()];
    for k in 1..n {
        for i in 0..n - k {
            // P_{i..i+k}(0) from P_{i..i+k-1} and P_{i+1..i+k}
            let num = h[i + k].clone() * p[i].clone() - h[i].clone() * p[i + 1].clone();
            p[i] = num / (h[i + k].clone() - h[i].clone());
        }
        diag.push(p[0].clone());
    }
    diag
}

/// Estimate `F⁽ᵍ⁾(ε)` from exact one-interval determinants.
///
/// `y_n = -(ln D_n - S_{g-1}(n)) n^{2g-2} = F⁽ᵍ⁾ + F⁽ᵍ⁺¹⁾/n² + …` where
/// `S_{g-1}` is the series through `F⁽ᵍ⁻¹⁾`; `y` is extrapolated in `1/n²`
/// from nodes spread over the window. The uncertainty is the larger of the
/// last Richardson increment and the change when the nodes are shifted.
pub fn fit_free_energy(
    g_target: u32,
    epsilon: f64,
    n_window: RangeInclusive<usize>,
    sign: ConstantSign,
    table: &FreeEnergyTable,
) -> Result<FitResult> {
    let (lo, hi) = (*n_window.start(), *n_window.end());
    if g_target < 2 {
        return Err(Error::InvalidArgument(format!(
            "fitting starts at g = 2, got {g_target}"
        )));
    }
    if hi < lo + 5 || lo < 2 {
        return Err(Error::InvalidArgument(format!(
            "fit window [{lo}, {hi}] needs at least 6 points and n >= 2"
        )));
    }
    let have = table.available_max_g(epsilon);
    if g_target - 1 > have {
        return Err(Error::UnavailableOrder {
            g: g_target - 1,
            reason: format!("fitting F^({g_target}) needs all lower orders"),
        });
    }
    let known = one_interval_series(epsilon, g_target - 1, sign, table)?;
    let depth = RICHARDSON_DEPTH.min(hi - lo - 1);
    let prefix = ExactPrefix::compute(epsilon, hi, 1e-30)?;

    let (estimate, uncertainty) = with_precision(prefix.bits, || {
        let nodes = |shift: usize| -> Vec<usize> {
            (0..=depth)
                .map(|i| hi - shift - i * (hi - shift - lo) / depth)
                .collect()
        };
        let ladder = |ns: &[usize]| -> Vec<BigReal> {
            let h: Vec<BigReal> = ns
                .iter()
                .map(|&n| {
                    let x = BigReal::from_int(n as i64);
                    BigReal::one() / (x.clone() * x)
                })
                .collect();
            let series = known.evaluate_many_in::<BigReal>(ns);
            let y: Vec<BigReal> = ns
                .iter()
                .zip(series)
                .map(|(&n, s)| {
                    let rest = prefix.one_interval(n).clone() - s;
                    -rest * BigReal::from_int(n as i64).powi(2 * g_target as i32 - 2)
                })
                .collect();
            neville_to_zero(&h, &y)
        };
        let main = ladder(&nodes(0));
        let shifted = ladder(&nodes(1));
        let best = main[depth].clone();
        let increment = (best.clone() - main[depth - 1].clone()).abs().to_f64();
        let spread = (best.clone() - shifted[depth].clone()).abs().to_f64();
        (best.to_f64(), increment.max(spread))
    });

    if !estimate.is_finite() || uncertainty > estimate.abs() {
        return Err(Error::IllConditioned {
            g: g_target,
            epsilon,
            estimate,
            uncertainty,
        });
    }
    Ok(FitResult {
        g: g_target,
        epsilon,
        estimate,
        uncertainty,
        n_window: (lo, hi),
        precision_bits: prefix.bits,
    })
}

/// Fit `F⁽ᵍ⁾` for `g = 4..=g_max` in turn, storing each in `table`.
pub fn fit_higher_orders(
    g_max: u32,
    epsilon: f64,
    n_window: RangeInclusive<usize>,
    sign: ConstantSign,
    table: &mut FreeEnergyTable,
) -> Result<Vec<FitResult>> {
    let mut out = Vec::new();
    for g in CLOSED_FORM_MAX_G + 1..=g_max {
        let fit = fit_free_energy(g, epsilon, n_window.clone(), sign, table)?;
        table.insert_fitted(
            g,
            epsilon,
            crate::asymptotics::FittedValue {
                estimate: fit.estimate,
                uncertainty: fit.uncertainty,
            },
        )?;
        out.push(fit);
    }
    Ok(out)
}

/// Outcome of comparing both constant signs against exact determinants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignResolution {
    pub epsilon: f64,
    pub sign: ConstantSign,
    /// `|residual|` of the accepted sign at each window end.
    pub accepted_first: f64,
    pub accepted_last: f64,
    /// Mean `|residual|` of the rejected sign over the window.
    pub rejected_mean: f64,
    pub n_window: (usize, usize),
}

/// Residual `ln D_n - S(n)` at order 0 for both signs.
pub fn order_zero_residuals(
    epsilon: f64,
    n_window: RangeInclusive<usize>,
) -> Result<Vec<(usize, f64, f64)>> {
    let hi = *n_window.end();
    let prefix = ExactPrefix::compute(epsilon, hi, 1e-20)?;
    let table = FreeEnergyTable::default();
    let plus = one_interval_series(epsilon, 1, ConstantSign::Plus, &table)?;
    let minus = one_interval_series(epsilon, 1, ConstantSign::Minus, &table)?;
    let ns: Vec<usize> = n_window.collect();
    Ok(with_precision(prefix.bits, || {
        let sp = plus.evaluate_many_in::<BigReal>(&ns);
        let sm = minus.evaluate_many_in::<BigReal>(&ns);
        ns.iter()
            .zip(sp.into_iter().zip(sm))
            .map(|(&n, (p, q))| {
                let exact = prefix.one_interval(n).clone();
                (n, (exact.clone() - p).to_f64(), (exact - q).to_f64())
            })
            .collect()
    }))
}

/// Decide which sign of `3ζ'(-1)` makes the order-0 residual vanish.
///
/// The accepted sign must show a residual that shrinks across the window
/// and ends below 1% of the sign gap; the other must stay within 10% of
/// `|6ζ'(-1)|`. Anything else is reported as inconclusive.
pub fn resolve_constant_sign(
    epsilon: f64,
    n_window: RangeInclusive<usize>,
) -> Result<SignResolution> {
    let (lo, hi) = (*n_window.start(), *n_window.end());
    if lo < 1 || hi <= lo {
        return Err(Error::InvalidArgument(format!(
            "sign window [{lo}, {hi}] must contain at least two points"
        )));
    }
    let rows = order_zero_residuals(epsilon, n_window)?;
    let gap = sign_gap();
    let judge = |pick: fn(&(usize, f64, f64)) -> f64| {
        let first = pick(&rows[0]).abs();
        let last = pick(rows.last().expect("nonempty")).abs();
        let mean = rows.iter().map(|r| pick(r).abs()).sum::<f64>() / rows.len() as f64;
        (first, last, mean)
    };
    let plus = judge(|r| r.1);
    let minus = judge(|r| r.2);
    let decays = |s: (f64, f64, f64)| s.1 < s.0 && s.1 < 0.01 * gap;
    let near_gap = |s: (f64, f64, f64)| ((s.2 - gap) / gap).abs() <= 0.1;

    let (sign, accepted, rejected) = match (decays(plus), decays(minus)) {
        (true, false) if near_gap(minus) => (ConstantSign::Plus, plus, minus),
        (false, true) if near_gap(plus) => (ConstantSign::Minus, minus, plus),
        _ => {
            return Err(Error::Inconclusive(format!(
                "epsilon={epsilon}: |r+| {:.3e} -> {:.3e}, |r-| {:.3e} -> {:.3e}",
                plus.0, plus.1, minus.0, minus.1
            )))
        }
    };
    Ok(SignResolution {
        epsilon,
        sign,
        accepted_first: accepted.0,
        accepted_last: accepted.1,
        rejected_mean: rejected.2,
        n_window: (lo, hi),
    })
}

/// Log-log slope of `|ln D - expansion|` against `n1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub m: u32,
    pub n2: usize,
    pub epsilon: f64,
    pub order: u32,
    pub slope: f64,
    /// `(n1, |residual|)` pairs used in the regression.
    pub points: Vec<(usize, f64)>,
}

/// Measure the decay exponent of the truncated multi-arc expansion along
/// `N = n1·m + n2`, everything in high precision.
pub fn residual_decay(
    m: u32,
    n2: usize,
    epsilon: f64,
    order: u32,
    n1_values: &[usize],
    sign: ConstantSign,
) -> Result<DecayFit> {
    if n2 >= m as usize || n1_values.len() < 2 || n1_values.contains(&0) {
        return Err(Error::InvalidArgument(
            "need 0 <= n2 < m and at least two positive n1 values".into(),
        ));
    }
    let series = AsymptoticSeries::build(
        m,
        n2 as u32,
        epsilon,
        SeriesOptions::new(order).with_sign(sign),
        &FreeEnergyTable::default(),
    )?;
    let n1_max = *n1_values.iter().max().expect("nonempty");
    let prefix = ExactPrefix::compute(epsilon, n1_max + 1, 1e-30)?;
    let points: Vec<(usize, f64)> = with_precision(prefix.bits, || {
        let values = series.evaluate_many_in::<BigReal>(n1_values);
        n1_values
            .iter()
            .zip(values)
            .map(|(&n1, s)| {
                let exact = prefix.multi_arc(m, n1 * m as usize + n2);
                (n1, (exact - s).abs().to_f64())
            })
            .collect()
    });
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    Ok(DecayFit {
        m,
        n2,
        epsilon,
        order,
        slope: least_squares_slope(&xs, &ys),
        points,
    })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neville_recovers_polynomial() {
        // y = 3 + 2h - h² is reproduced exactly from three nodes
        let h = [0.1, 0.05, 0.02];
        let y: Vec<f64> = h.iter().map(|x| 3.0 + 2.0 * x - x * x).collect();
        let d = neville_to_zero(&h, &y);
        assert!((d[2] - 3.0).abs() < 1e-13);
        assert!((d[1] - 3.0).abs() > 1e-3);
    }

    #[test]
    fn slope_of_power_law() {
        let xs: Vec<f64> = [10.0f64, 20.0, 40.0].iter().map(|x| x.ln()).collect();
        let ys: Vec<f64> = [10.0f64, 20.0, 40.0]
            .iter()
            .map(|x| (2.0 * x.powi(-3)).ln())
            .collect();
        assert!((least_squares_slope(&xs, &ys) + 3.0).abs() < 1e-12);
    }

    #[test]
    fn scan_rejects_bad_arguments() {
        assert!(residual_scan(5, &[0.3], 5..=12, 4, ConstantSign::Plus).is_err());
        assert!(residual_scan(5, &[0.3], 90..=91, 3, ConstantSign::Plus).is_err());
        assert!(scan_options(6, ConstantSign::Plus).is_ok());
    }

    #[test]
    fn scan_records_are_consistent_and_sorted() {
        let recs = residual_scan(3, &[0.5, 0.3], 30..=35, 4, ConstantSign::Plus).unwrap();
        assert_eq!(recs.len(), 12);
        assert_eq!(recs[0].epsilon, 0.3);
        for r in &recs {
            assert_eq!(r.residual, r.exact_logdet - r.truncated_expansion);
            assert_eq!(r.n, r.n1 * 3 + r.n2);
        }
        let groups = group_by_n2(&recs);
        assert_eq!(groups.len(), 3);
        assert!(groups.values().all(|g| g.len() == 4));
    }

    #[test]
    fn single_arc_scan_has_one_group() {
        let recs = residual_scan(1, &[0.3], 40..=45, 2, ConstantSign::Plus).unwrap();
        assert_eq!(group_by_n2(&recs).len(), 1);
        // the order-2 scan leaves out F2, so the scaled residual tends to -F2
        let f2 = free_energy(2, 0.3).unwrap();
        for r in &recs {
            assert!((r.scaled_residual + f2).abs() < 0.05 * f2.abs(), "{r:?}");
        }
    }

    #[test]
    fn sign_resolution_at_half() {
        let res = resolve_constant_sign(0.5, 20..=80).unwrap();
        assert_eq!(res.sign, ConstantSign::Plus);
        assert!((res.rejected_mean - sign_gap()).abs() < 0.1 * sign_gap());
    }

    #[test]
    fn fit_second_free_energy() {
        let fit = fit_free_energy(
            2,
            0.5,
            40..=120,
            ConstantSign::Plus,
            &FreeEnergyTable::default(),
        )
        .unwrap();
        assert!((fit.estimate + 1.0 / 64.0).abs() < 1e-6, "{fit:?}");
        assert!(fit.uncertainty < 1e-6);
    }
}
