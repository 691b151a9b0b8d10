//! Log-determinants of the arc Toeplitz matrices.
//!
//! The fast path is the Levinson–Durbin recursion: for a symmetric positive
//! definite Toeplitz matrix, `det T_N = Π σ_k²` where `σ_k²` are the
//! successive prediction-error variances. Logs are accumulated so nothing
//! under/overflows even when `D_N` is astronomically small.
//!
//! The matrices are extremely ill-conditioned (the smallest eigenvalue decays
//! geometrically in `N`), so the recursion runs in `f64` first and climbs to
//! double-double and then MPFR precision until its own a-posteriori error
//! estimate meets the requested accuracy.
//!
//! The dense oracle is an independent `O(N³)` Gaussian elimination with
//! partial pivoting carried out entirely in MPFR arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{with_precision, BigReal, DoubleDouble, Precision, Real};
use crate::symbol::{build_matrix_in, ArcConfiguration};

/// Default size cap for the dense oracle.
pub const ORACLE_SIZE_CAP: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Levinson,
    DenseOracle,
    Trivial,
}

/// A natural-log determinant with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogDetResult {
    pub value: f64,
    pub n: usize,
    pub config: ArcConfiguration,
    pub method: Method,
    pub working_precision_bits: u32,
    /// Smallest relative pivot `σ_k² / (t_0 ‖a_k‖²)` seen during the recursion
    /// (for the dense oracle: smallest `|u_kk| / t_0`).
    pub min_pivot_ratio: f64,
    /// A-posteriori bound on `|value - ln D_N|`.
    pub error_estimate: f64,
}

/// Controls precision escalation of [`log_det_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    /// Accept a tier once its error estimate is below this (absolute, in ln D).
    pub target_abs_error: f64,
    /// Escalate whenever `min_pivot_ratio < pivot_floor_factor * unit_roundoff`.
    pub pivot_floor_factor: f64,
    /// Highest MPFR precision tried before reporting a precision failure.
    pub max_bits: u32,
    /// First tier tried.
    pub start: Precision,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        Self {
            target_abs_error: 1e-12,
            pivot_floor_factor: 1e3,
            max_bits: 1 << 15,
            start: Precision::Native,
        }
    }
}

/// Output of one Levinson pass.
#[derive(Debug, Clone)]
pub struct LevinsonTrace<T> {
    /// `ln D_k` for `k = 0..=N` (`ln D_0 = 0`).
    pub prefix: Vec<T>,
    /// Prediction-error variances `σ_0², …, σ_{N-1}²` as doubles (diagnostic).
    pub prediction_errors: Vec<f64>,
    /// `log2` of the smallest `σ_k² / (t_0 ‖a_k‖²)`.
    pub log2_min_pivot_ratio: f64,
    /// `log2` of the sum of the relative condition numbers `t_0 ‖a_k‖² / σ_k²`.
    pub log2_condition_sum: f64,
    pub bits: u32,
}

impl<T: Real> LevinsonTrace<T> {
    pub fn log_det(&self) -> &T {
        self.prefix.last().expect("prefix holds ln D_0")
    }

    /// `log2` of the error bound `4u (Σ_k t_0‖a_k‖²/σ_k² + N max(|ln D|, 1))`,
    /// valid for every entry of `prefix`. Kept in log form because both the
    /// unit roundoff and the condition sum leave the `f64` range.
    pub fn log2_error_estimate(&self) -> f64 {
        let n = self.prediction_errors.len() as f64;
        let magnitude = self.log_det().to_f64().abs().max(1.0);
        let log2_direct = (n * magnitude).log2();
        let (hi, lo) = if self.log2_condition_sum > log2_direct {
            (self.log2_condition_sum, log2_direct)
        } else {
            (log2_direct, self.log2_condition_sum)
        };
        2.0 - self.bits as f64 + hi + (1.0 + (lo - hi).exp2()).log2()
    }

    pub fn error_estimate(&self) -> f64 {
        self.log2_error_estimate().exp2()
    }

    /// Smallest relative pivot; underflows to 0 below the `f64` range.
    pub fn min_pivot_ratio(&self) -> f64 {
        self.log2_min_pivot_ratio.exp2()
    }
}

/// The recursion broke down: a prediction error was non-positive or grew.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakdown {
    pub step: usize,
    pub bits: u32,
}

/// Levinson–Durbin on the first row of a symmetric Toeplitz matrix.
pub fn levinson<T: Real>(row: &[T]) -> std::result::Result<LevinsonTrace<T>, Breakdown> {
    let bits = T::precision_bits();
    let n = row.len();
    let mut prefix = Vec::with_capacity(n + 1);
    let mut prediction_errors = Vec::with_capacity(n);
    prefix.push(T::zero());
    if n == 0 {
        return Ok(LevinsonTrace {
            prefix,
            prediction_errors,
            log2_min_pivot_ratio: 0.0,
            log2_condition_sum: f64::NEG_INFINITY,
            bits,
        });
    }

    let t0 = row[0].clone();
    if t0 <= T::zero() {
        return Err(Breakdown { step: 0, bits });
    }
    let mut err = t0.clone();
    let mut log_sum = err.ln();
    prefix.push(log_sum.clone());
    prediction_errors.push(err.to_f64());
    let mut log2_min_ratio = 0.0f64;
    let mut log2_cond = 0.0f64;
    let log_t0 = t0.ln();

    // predictor x_k ≈ Σ_{i=1}^{k} a_i x_{k-i}
    let mut a: Vec<T> = Vec::with_capacity(n);
    let mut scratch: Vec<T> = Vec::with_capacity(n);
    for k in 1..n {
        let mut acc = row[k].clone();
        for (i, ai) in a.iter().enumerate() {
            acc -= ai.clone() * row[k - 1 - i].clone();
        }
        let r = acc / err.clone();

        scratch.clear();
        for i in 0..a.len() {
            scratch.push(a[i].clone() - r.clone() * a[a.len() - 1 - i].clone());
        }
        scratch.push(r.clone());
        std::mem::swap(&mut a, &mut scratch);

        let one = T::one();
        let next = err.clone() * ((one.clone() - r.clone()) * (one + r));
        if next <= T::zero() || next > err {
            return Err(Breakdown { step: k, bits });
        }
        err = next;
        log_sum += err.ln();
        prefix.push(log_sum.clone());
        prediction_errors.push(err.to_f64());

        let mut norm2 = T::one();
        for ai in &a {
            norm2 += ai.clone() * ai.clone();
        }
        let log2_ratio = (err.ln() - log_t0.clone() - norm2.ln()).to_f64() / std::f64::consts::LN_2;
        log2_min_ratio = log2_min_ratio.min(log2_ratio);
        // log2(2^c + 2^-r)
        let (hi, lo) = if log2_cond > -log2_ratio {
            (log2_cond, -log2_ratio)
        } else {
            (-log2_ratio, log2_cond)
        };
        log2_cond = hi + (1.0 + (lo - hi).exp2()).log2();
    }

    Ok(LevinsonTrace {
        prefix,
        prediction_errors,
        log2_min_pivot_ratio: log2_min_ratio,
        log2_condition_sum: log2_cond,
        bits,
    })
}

/// Levinson pass for the arc matrix of order `n`, in format `T`.
pub fn levinson_for<T: Real>(
    config: &ArcConfiguration,
    n: usize,
) -> std::result::Result<LevinsonTrace<T>, Breakdown> {
    if n == 0 {
        return levinson::<T>(&[]);
    }
    let matrix = build_matrix_in::<T>(config, n).expect("n >= 1");
    levinson(matrix.first_row())
}

fn run_tier(
    config: &ArcConfiguration,
    n: usize,
    tier: Precision,
) -> std::result::Result<(f64, LevinsonTrace<f64>), Breakdown> {
    fn demote<T: Real>(trace: LevinsonTrace<T>) -> (f64, LevinsonTrace<f64>) {
        let log2_err = trace.log2_error_estimate();
        let LevinsonTrace {
            prefix,
            prediction_errors,
            log2_min_pivot_ratio,
            log2_condition_sum,
            bits,
        } = trace;
        (
            log2_err,
            LevinsonTrace {
                prefix: prefix.iter().map(Real::to_f64).collect(),
                prediction_errors,
                log2_min_pivot_ratio,
                log2_condition_sum,
                bits,
            },
        )
    }
    match tier {
        Precision::Native => levinson_for::<f64>(config, n).map(demote),
        Precision::DoubleDouble => levinson_for::<DoubleDouble>(config, n).map(demote),
        Precision::Arbitrary(bits) => {
            with_precision(bits, || levinson_for::<BigReal>(config, n).map(demote))
        }
    }
}

fn next_tier(current: Precision, hint_bits: Option<u32>) -> Precision {
    match current {
        Precision::Native => Precision::DoubleDouble,
        Precision::DoubleDouble => Precision::Arbitrary(hint_bits.unwrap_or(0).max(212)),
        Precision::Arbitrary(bits) => Precision::Arbitrary(hint_bits.unwrap_or(0).max(2 * bits)),
    }
}

/// Runs the escalation ladder and returns the accepted trace (in `f64`),
/// its error estimate and the tier it came from.
pub fn escalate(
    config: &ArcConfiguration,
    n: usize,
    policy: &PrecisionPolicy,
) -> Result<(LevinsonTrace<f64>, f64, Precision)> {
    let mut tier = policy.start;
    loop {
        let outcome = run_tier(config, n, tier);
        let hint = match &outcome {
            Ok((log2_err, trace)) => {
                let floor_ok = trace.log2_min_pivot_ratio
                    >= policy.pivot_floor_factor.log2() - trace.bits as f64;
                let log2_target = policy.target_abs_error.log2();
                if floor_ok && *log2_err <= log2_target {
                    return Ok((trace.clone(), log2_err.exp2(), tier));
                }
                // bits that would bring the estimate under target, plus guard
                let needed = log2_err - log2_target + trace.bits as f64 + 32.0;
                Some(needed.ceil().min(u32::MAX as f64) as u32)
            }
            Err(_) => None,
        };
        let next = next_tier(tier, hint);
        if next.bits() > policy.max_bits {
            let reason = match outcome {
                Ok((log2_err, trace)) => format!(
                    "error estimate 2^{log2_err:.1} above target {:e} (min pivot ratio 2^{:.1})",
                    policy.target_abs_error, trace.log2_min_pivot_ratio
                ),
                Err(b) => format!(
                    "prediction error non-positive or increasing at step {}",
                    b.step
                ),
            };
            return Err(Error::PrecisionFailure {
                stage: "levinson",
                n,
                bits: tier.bits(),
                reason,
            });
        }
        log::debug!(
            "log_det m={} eps={} N={n}: escalating {:?} -> {:?}",
            config.m(),
            config.epsilon(),
            tier,
            next
        );
        tier = next;
    }
}

fn trivial(config: &ArcConfiguration, n: usize) -> Option<LogDetResult> {
    let value = if n == 0 {
        0.0
    } else if config.m() as usize > n {
        // the matrix is ε·I when every off-diagonal index is below m
        n as f64 * config.epsilon().ln()
    } else {
        return None;
    };
    Some(LogDetResult {
        value,
        n,
        config: *config,
        method: Method::Trivial,
        working_precision_bits: f64::MANTISSA_DIGITS,
        min_pivot_ratio: 1.0,
        error_estimate: f64::EPSILON * value.abs(),
    })
}

/// `ln D_N(m, ε)` with the default precision policy.
pub fn log_det(config: &ArcConfiguration, n: usize) -> Result<LogDetResult> {
    log_det_with(config, n, &PrecisionPolicy::default())
}

pub fn log_det_with(
    config: &ArcConfiguration,
    n: usize,
    policy: &PrecisionPolicy,
) -> Result<LogDetResult> {
    if let Some(result) = trivial(config, n) {
        return Ok(result);
    }
    let (trace, err, tier) = escalate(config, n, policy)?;
    Ok(LogDetResult {
        value: *trace.log_det(),
        n,
        config: *config,
        method: Method::Levinson,
        working_precision_bits: tier.bits(),
        min_pivot_ratio: trace.min_pivot_ratio(),
        error_estimate: err,
    })
}

/// `ln D_k` for all `k ≤ n` in MPFR, with absolute error below `target`.
///
/// Returns the values together with the precision they were computed at;
/// callers should keep working inside `with_precision(bits, ..)`.
pub fn log_det_prefix_high(
    config: &ArcConfiguration,
    n: usize,
    target: f64,
) -> Result<(Vec<BigReal>, u32)> {
    let policy = PrecisionPolicy {
        target_abs_error: target,
        start: Precision::Arbitrary(128),
        ..PrecisionPolicy::default()
    };
    let (_, _, tier) = escalate(config, n, &policy)?;
    let bits = tier.bits();
    let trace = with_precision(bits, || levinson_for::<BigReal>(config, n)).map_err(|b| {
        Error::PrecisionFailure {
            stage: "levinson",
            n,
            bits,
            reason: format!("breakdown at step {} on rerun", b.step),
        }
    })?;
    Ok((trace.prefix, bits))
}

/// Gaussian elimination with partial pivoting; returns `(ln|det|, sign, min |pivot|)`.
pub fn dense_log_det<T: Real>(mut a: Vec<Vec<T>>) -> (T, i8, T) {
    let n = a.len();
    let mut log_abs = T::zero();
    let mut sign = 1i8;
    let mut min_pivot: Option<T> = None;
    for col in 0..n {
        let (piv_row, _) = a
            .iter()
            .enumerate()
            .skip(col)
            .map(|(i, row)| (i, row[col].abs()))
            .fold(
                (col, T::zero()),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if piv_row != col {
            a.swap(piv_row, col);
            sign = -sign;
        }
        let pivot = a[col][col].clone();
        if pivot.is_zero() {
            return (T::zero(), 0, T::zero());
        }
        if pivot < T::zero() {
            sign = -sign;
        }
        let mag = pivot.abs();
        log_abs += mag.ln();
        min_pivot = Some(match min_pivot {
            Some(m) if m < mag => m,
            _ => mag,
        });
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for row in lower.iter_mut() {
            if row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone() / pivot.clone();
            for j in col + 1..n {
                let delta = factor.clone() * pivot_row[j].clone();
                row[j] -= delta;
            }
            row[col] = T::zero();
        }
    }
    (log_abs, sign, min_pivot.unwrap_or_else(T::one))
}

/// Dense MPFR oracle for `ln D_N(m, ε)`.
pub fn log_det_dense_oracle(
    config: &ArcConfiguration,
    n: usize,
    precision_bits: u32,
) -> Result<LogDetResult> {
    log_det_dense_oracle_capped(config, n, precision_bits, ORACLE_SIZE_CAP)
}

pub fn log_det_dense_oracle_capped(
    config: &ArcConfiguration,
    n: usize,
    precision_bits: u32,
    cap: usize,
) -> Result<LogDetResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("dense oracle needs N >= 1".into()));
    }
    if n > cap {
        return Err(Error::SizeCap { n, cap });
    }
    if precision_bits < 53 {
        return Err(Error::InvalidArgument(format!(
            "oracle precision must be at least 53 bits, got {precision_bits}"
        )));
    }
    with_precision(precision_bits, || {
        let matrix = build_matrix_in::<BigReal>(config, n)?;
        let t0 = matrix.first_row()[0].clone();
        let (log_abs, sign, min_pivot) = dense_log_det(matrix.to_dense());
        if sign != 1 {
            return Err(Error::PrecisionFailure {
                stage: "dense-oracle",
                n,
                bits: precision_bits,
                reason: format!("determinant sign {sign} is not positive"),
            });
        }
        let value = log_abs.to_f64();
        Ok(LogDetResult {
            value,
            n,
            config: *config,
            method: Method::DenseOracle,
            working_precision_bits: precision_bits,
            min_pivot_ratio: (min_pivot / t0).to_f64(),
            error_estimate: f64::NAN,
        })
    })
}

/// A-priori MPFR precision for the dense oracle.
///
/// The smallest eigenvalue of each one-interval block of size `b` behaves
/// like `tan²(πε/4)^b`; the oracle carries that many bits plus a wide guard.
pub fn suggested_oracle_bits(config: &ArcConfiguration, n: usize) -> u32 {
    let m = config.m() as usize;
    let block = n.div_ceil(m) as f64;
    let q = (std::f64::consts::PI * config.epsilon() / 4.0)
        .tan()
        .powi(2);
    let decay_bits = -q.log2();
    (128.0 + 1.25 * block * decay_bits + 2.0 * (n as f64 + 1.0).log2()).ceil() as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use std::f64::consts::PI;

    fn cfg(m: u32, eps: f64) -> ArcConfiguration {
        ArcConfiguration::new(m, eps).unwrap()
    }

    #[test]
    fn empty_determinant_is_one() {
        let r = log_det(&cfg(5, 0.3), 0).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.method, Method::Trivial);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn one_by_one() {
        for m in 2..=6 {
            let r = log_det(&cfg(m, 0.5), 1).unwrap();
            assert!((r.value - 0.5f64.ln()).abs() < 1e-15);
        }
        let r = log_det(&cfg(1, 0.5), 1).unwrap();
        assert!((r.value - (-0.6931472)).abs() < 1e-7);
    }

    #[test]
    fn two_by_two_closed_form() {
        let want = (0.25 - 1.0 / (PI * PI)).ln();
        let r = log_det(&cfg(1, 0.5), 2).unwrap();
        assert!((r.value - want).abs() < 1e-14);
        assert!((r.value - (-1.905966894590544)).abs() < 1e-13);
        assert!((0.25 - 1.0 / (PI * PI) - 0.1486788).abs() < 1e-7);
    }

    #[test]
    fn m_greater_than_n_is_eps_power() {
        let r = log_det(&cfg(7, 0.4), 5).unwrap();
        assert!((r.value - 5.0 * 0.4f64.ln()).abs() < 1e-14);
        assert!((r.value - (-4.5814537)).abs() < 1e-7);
        // the recursion agrees with the short-cut
        let t = levinson_for::<f64>(&cfg(7, 0.4), 5).unwrap();
        assert!((t.log_det() - 5.0 * 0.4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn oracle_matches_closed_form_to_25_digits() {
        let c = cfg(1, 0.5);
        with_precision(113, || {
            let m = build_matrix_in::<BigReal>(&c, 2).unwrap();
            let (v, sign, _) = dense_log_det(m.to_dense());
            assert_eq!(sign, 1);
            let pi = BigReal::pi();
            let want = (BigReal::lit(0.25) - BigReal::one() / (pi.clone() * pi)).ln();
            let rel = ((v - want.clone()) / want).abs().to_f64();
            assert!(rel < 1e-25, "relative error {rel:e}");
        });
    }

    #[test]
    fn oracle_one_by_one() {
        let r = log_det_dense_oracle(&cfg(2, 0.9), 1, 113).unwrap();
        assert!((r.value - 0.9f64.ln()).abs() < 1e-15);
        assert_eq!(r.method, Method::DenseOracle);
    }

    #[test]
    fn oracle_agrees_with_levinson_m3() {
        let c = cfg(3, 0.6);
        let fast = log_det(&c, 30).unwrap();
        let slow = log_det_dense_oracle(&c, 30, suggested_oracle_bits(&c, 30)).unwrap();
        assert!((fast.value - slow.value).abs() <= 1e-10);
    }

    #[test]
    fn oracle_rejects_bad_arguments() {
        let c = cfg(1, 0.5);
        assert!(matches!(
            log_det_dense_oracle(&c, 201, 128),
            Err(Error::SizeCap { n: 201, cap: 200 })
        ));
        assert!(log_det_dense_oracle(&c, 3, 40).is_err());
        assert!(log_det_dense_oracle(&c, 0, 128).is_err());
    }

    #[test]
    fn native_precision_is_escalated_for_ill_conditioned_cases() {
        let c = cfg(1, 0.1);
        let r = log_det(&c, 60).unwrap();
        assert!(r.working_precision_bits > 106, "{r:?}");
        let slow = log_det_dense_oracle(&c, 60, suggested_oracle_bits(&c, 60)).unwrap();
        assert!((r.value - slow.value).abs() < 1e-9);
    }

    #[test]
    fn precision_failure_when_ceiling_is_too_low() {
        let policy = PrecisionPolicy {
            max_bits: 106,
            ..PrecisionPolicy::default()
        };
        let err = log_det_with(&cfg(1, 0.05), 80, &policy).unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn prediction_errors_positive_and_non_increasing() {
        let t = with_precision(512, || levinson_for::<BigReal>(&cfg(2, 0.35), 50)).unwrap();
        for w in t.prediction_errors.windows(2) {
            assert!(w[1] > 0.0 && w[1] <= w[0]);
        }
    }

    #[test]
    fn high_precision_prefix_matches_f64_path() {
        let c = cfg(1, 0.5);
        let (prefix, bits) = log_det_prefix_high(&c, 40, 1e-30).unwrap();
        assert!(bits > 106);
        for k in [1usize, 10, 25, 40] {
            let fast = log_det(&c, k).unwrap();
            assert!((prefix[k].to_f64() - fast.value).abs() < 1e-11);
        }
    }
}
