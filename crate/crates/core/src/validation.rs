//! Invariant suites run by the command-line self-test.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{multi_arc_skeleton, reexpanded_skeleton};
use crate::constants::ConstantSign;
use crate::cue_mc::moment_check;
use crate::factorize::log_det_factorized;
use crate::harness::resolve_constant_sign;
use crate::logdet::{log_det, log_det_dense_oracle, suggested_oracle_bits};
use crate::symbol::ArcConfiguration;

/// Pass/fail tally of one suite.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    /// First few failure descriptions.
    pub failures: Vec<String>,
}

const MAX_REPORTED: usize = 10;

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            if self.failures.len() < MAX_REPORTED {
                self.failures.push(describe());
            }
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

/// Grid sizes for the suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Depth {
    /// Reduced grids, a few seconds.
    Quick,
    /// The full validation grids.
    Full,
}

pub const EPSILON_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
pub const TOLERANCE: f64 = 1e-9;

fn grid(depth: Depth) -> Vec<(u32, f64, usize)> {
    let n_max = match depth {
        Depth::Quick => 20,
        Depth::Full => 60,
    };
    let mut out = Vec::new();
    for m in 1..=7u32 {
        for &e in &EPSILON_GRID {
            for n in 1..=n_max {
                out.push((m, e, n));
            }
        }
    }
    out
}

fn check_grid(
    name: &str,
    depth: Depth,
    other: impl Fn(&ArcConfiguration, usize) -> crate::Result<f64> + Sync,
) -> SuiteReport {
    let outcomes: Vec<(bool, String)> = grid(depth)
        .par_iter()
        .map(|&(m, e, n)| {
            let config = ArcConfiguration::new(m, e).expect("grid is valid");
            match (log_det(&config, n), other(&config, n)) {
                (Ok(a), Ok(b)) => {
                    let d = (a.value - b).abs();
                    (d <= TOLERANCE, format!("m={m} eps={e} N={n}: |diff|={d:e}"))
                }
                (a, b) => (
                    false,
                    format!("m={m} eps={e} N={n}: {:?} / {:?}", a.err(), b.err()),
                ),
            }
        })
        .collect();
    let mut report = SuiteReport::new(name);
    for (ok, msg) in outcomes {
        report.record(ok, || msg);
    }
    report
}

/// Levinson against the dense MPFR oracle.
pub fn oracle_equivalence(depth: Depth) -> SuiteReport {
    check_grid("oracle-equivalence", depth, |c, n| {
        Ok(log_det_dense_oracle(c, n, suggested_oracle_bits(c, n))?.value)
    })
}

/// Direct determinant against the one-interval factorization.
pub fn factorization(depth: Depth) -> SuiteReport {
    check_grid("factorization", depth, |c, n| {
        Ok(log_det_factorized(c, n)?.value)
    })
}

/// `m > N` gives `N ln ε`.
pub fn degenerate_case() -> SuiteReport {
    let mut r = SuiteReport::new("degenerate-case");
    for m in 2..=12u32 {
        for n in 1..(m as usize).min(9) {
            for &e in &EPSILON_GRID {
                let c = ArcConfiguration::new(m, e).expect("valid");
                let got = log_det(&c, n).map(|x| x.value);
                let want = n as f64 * e.ln();
                r.record(matches!(got, Ok(v) if (v - want).abs() <= 1e-12), || {
                    format!("m={m} N={n} eps={e}: {got:?} vs {want}")
                });
            }
        }
    }
    r
}

/// Closed-form series coefficients against the re-expansion route.
pub fn series_reexpansion() -> SuiteReport {
    let mut r = SuiteReport::new("series-reexpansion");
    for m in 1..=7u32 {
        for n2 in 0..m {
            let a = multi_arc_skeleton::<num_rational::BigRational>(m, n2, 7);
            let b = reexpanded_skeleton::<num_rational::BigRational>(m, n2, 7);
            r.record(a == b, || format!("m={m} n2={n2}"));
        }
    }
    r
}

/// The default constant sign wins decisively at several ε.
pub fn sign_resolution(depth: Depth) -> SuiteReport {
    let hi = match depth {
        Depth::Quick => 80,
        Depth::Full => 200,
    };
    let mut r = SuiteReport::new("sign-resolution");
    for e in [0.2, 0.4, 0.6] {
        let res = resolve_constant_sign(e, 20..=hi);
        r.record(
            matches!(&res, Ok(s) if s.sign == ConstantSign::default()),
            || format!("eps={e}: {res:?}"),
        );
    }
    r
}

/// Power-sum moments of the sampler within three standard errors.
pub fn moments(depth: Depth, seed: u64) -> SuiteReport {
    let samples = match depth {
        Depth::Quick => 100_000,
        Depth::Full => 1_000_000,
    };
    let mut r = SuiteReport::new("sampler-moments");
    for n in 2..=5usize {
        match moment_check(n, 3, samples, seed) {
            Ok(results) => {
                for m in results {
                    r.record(m.z_score() <= 3.0, || format!("{m:?}"));
                }
            }
            Err(e) => r.record(false, || format!("N={n}: {e}")),
        }
    }
    r
}

pub fn run_all(depth: Depth, seed: u64) -> Vec<SuiteReport> {
    vec![
        oracle_equivalence(depth),
        factorization(depth),
        degenerate_case(),
        series_reexpansion(),
        sign_resolution(depth),
        moments(depth, seed),
    ]
}
