//! Invariants of the symbol, the determinant kernels and the output layer.

use std::f64::consts::PI;

use arcdet::cue_mc::{arc_event_angles, arc_event_norm_form};
use arcdet::harness::{emit_results, Format, Metadata, ResidualRecord};
use arcdet::logdet::levinson_for;
use arcdet::scalar::with_precision;
use arcdet::{
    euclidean_split, fourier_coefficient, log_det, log_det_factorized, ArcConfiguration, BigReal,
};
use proptest::prelude::*;

fn cfg(m: u32, eps: f64) -> ArcConfiguration {
    ArcConfiguration::new(m, eps).unwrap()
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rule(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let fc = f(c);
        ((b - a) / 6.0 * (f(a) + 4.0 * fc + f(b)), fc)
    }
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let c = 0.5 * (a + b);
        let (left, _) = rule(f, a, c);
        let (right, _) = rule(f, c, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, c, left, tol / 2.0, depth - 1) + recurse(f, c, b, right, tol / 2.0, depth - 1)
    }
    let (whole, _) = rule(f, a, b);
    recurse(f, a, b, whole, tol, 40)
}

/// `t_k` as `(1/2π) Σ_arcs ∫ cos(kθ) dθ`, integrating each arc separately so
/// the integrand is smooth.
fn quadrature_coefficient(config: &ArcConfiguration, k: i64) -> f64 {
    let integrand = move |t: f64| (k as f64 * t).cos();
    config
        .arcs()
        .map(|(centre, half)| simpson(&integrand, centre - half, centre + half, 1e-13))
        .sum::<f64>()
        / (2.0 * PI)
}

fn sample_record(i: usize, eps: f64) -> ResidualRecord {
    ResidualRecord {
        m: 5,
        n: 90 + i,
        n1: (90 + i) / 5,
        n2: (90 + i) % 5,
        epsilon: eps,
        exact_logdet: -(i as f64) * eps,
        truncated_expansion: -(i as f64) * eps + 1e-7,
        residual: -1e-7,
        scaled_residual: -1e-7 * ((90 + i) / 5) as f64,
        truncation_order: 4,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coefficients_are_even_and_bounded(m in 1u32..10, eps in 0.01f64..0.99, k in 1i64..200) {
        let c = cfg(m, eps);
        prop_assert_eq!(fourier_coefficient(&c, k), fourier_coefficient(&c, -k));
        prop_assert_eq!(fourier_coefficient(&c, 0), eps);
        prop_assert!(fourier_coefficient(&c, k).abs() < eps);
        if k % m as i64 != 0 {
            prop_assert_eq!(fourier_coefficient(&c, k), 0.0);
        }
    }

    #[test]
    fn coefficients_match_quadrature(m in 1u32..7, eps in 0.05f64..0.95, k_frac in 0.0f64..1.0) {
        let c = cfg(m, eps);
        let k = (k_frac * 3.0 * m as f64).round() as i64;
        let closed = fourier_coefficient(&c, k);
        let numeric = quadrature_coefficient(&c, k);
        prop_assert!((closed - numeric).abs() <= 1e-10, "k={} closed={} quad={}", k, closed, numeric);
    }

    #[test]
    fn log_det_is_negative_and_increasing_in_eps(
        m in 1u32..6, n in 1usize..40, e1 in 0.05f64..0.9, de in 0.01f64..0.09,
    ) {
        let lo = log_det(&cfg(m, e1), n).unwrap().value;
        let hi = log_det(&cfg(m, e1 + de), n).unwrap().value;
        prop_assert!(lo < 0.0);
        prop_assert!(hi < 0.0);
        prop_assert!(lo < hi, "m={} n={} {} !< {}", m, n, lo, hi);
    }

    #[test]
    fn trivial_regime_is_eps_power(m in 2u32..16, eps in 0.01f64..0.99, n_frac in 0.0f64..1.0) {
        let n = 1 + (n_frac * (m - 1) as f64) as usize;
        prop_assume!(n < m as usize);
        let expected = n as f64 * eps.ln();
        prop_assert!((log_det(&cfg(m, eps), n).unwrap().value - expected).abs() <= 1e-12);
        prop_assert!((log_det_factorized(&cfg(m, eps), n).unwrap().value - expected).abs() <= 1e-12);
    }

    #[test]
    fn prediction_errors_positive_and_non_increasing(
        m in 1u32..5, eps in 0.05f64..0.95, n in 2usize..48,
    ) {
        let trace = with_precision(512, || levinson_for::<BigReal>(&cfg(m, eps), n)).unwrap();
        let sigma = &trace.prediction_errors;
        prop_assert_eq!(sigma.len(), n);
        prop_assert!(sigma.iter().all(|&s| s > 0.0));
        prop_assert!(sigma.windows(2).all(|w| w[1] <= w[0]), "{:?}", sigma);
    }

    #[test]
    fn factorization_identity_holds(m in 1u32..9, eps in 0.05f64..0.95, n in 1usize..80) {
        let c = cfg(m, eps);
        let direct = log_det(&c, n).unwrap().value;
        let split = log_det_factorized(&c, n).unwrap().value;
        prop_assert!((direct - split).abs() <= 1e-9, "{} vs {}", direct, split);
    }

    #[test]
    fn euclidean_split_recombines(n in 0usize..100_000, m in 1u32..1000) {
        let s = euclidean_split(n, m);
        prop_assert_eq!(s.n1 * m as usize + s.n2, n);
        prop_assert!(s.n2 < m as usize);
    }

    #[test]
    fn arc_event_forms_agree(
        angles in prop::collection::vec(-10.0f64..10.0, 1..8), m in 1u32..7, eps in 0.02f64..0.98,
    ) {
        // skip measure-zero boundary cases where rounding decides
        let c = cfg(m, eps);
        let near_edge = angles.iter().any(|&t| {
            let local = (m as f64 * t).rem_euclid(2.0 * PI);
            let local = local.min(2.0 * PI - local);
            (local - PI * eps).abs() < 1e-9
        });
        prop_assume!(!near_edge);
        let direct = arc_event_angles(&angles, m, eps);
        prop_assert_eq!(direct, arc_event_norm_form(&angles, m, eps));
        prop_assert_eq!(direct, angles.iter().all(|&t| c.contains(t)));
    }
}

#[test]
fn emission_is_deterministic_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let records: Vec<ResidualRecord> = (0..6).map(|i| sample_record(i, 0.35)).collect();
    let mut meta = Metadata::new();
    meta.insert("artifact".into(), "test".into());
    meta.insert("seed".into(), 7.into());

    for format in [Format::Csv, Format::Json] {
        let a = dir.path().join(format!("a.{format:?}"));
        let b = dir.path().join(format!("b.{format:?}"));
        emit_results(&records, &a, format, &meta).unwrap();
        emit_results(&records, &b, format, &meta).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    let csv = std::fs::read_to_string(dir.path().join("a.Csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# artifact: \"test\""));
    assert_eq!(lines.next(), Some("# seed: 7"));
    let header = lines.next().unwrap();
    assert!(header.starts_with("m,N,n1,n2,epsilon"), "{header}");
    assert_eq!(lines.count(), records.len());

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.Json")).unwrap()).unwrap();
    assert_eq!(json["metadata"]["seed"], 7);
    let rows = json["records"].as_array().unwrap();
    assert_eq!(rows.len(), records.len());
    for (row, rec) in rows.iter().zip(&records) {
        assert_eq!(row["N"], rec.n);
        assert_eq!(row["m"], 5);
        assert_eq!(row["epsilon"].as_f64(), Some(rec.epsilon));
        assert_eq!(row["residual"].as_f64(), Some(rec.residual));
        assert_eq!(row["truncation_order"], 4);
    }
}
