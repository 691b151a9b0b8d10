//! Monte Carlo over CUE eigenvalue angles.
//!
//! The joint density of the `N` angles is `∝ ∏_{p<q} |e^{iθ_p} - e^{iθ_q}|²`.
//! Chains use single-angle Metropolis updates in log-weight space with a
//! 50/50 mixture of uniform refreshes and Gaussian steps (both symmetric).
//! Each chain draws from its own ChaCha8 stream, so results depend only on
//! `(seed, chain index)` and not on thread scheduling.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logdet::log_det;
use crate::symbol::ArcConfiguration;

/// Burn-in sweeps per angle.
pub const BURN_IN_PER_ANGLE: u64 = 50;
/// Standard deviation of the Gaussian proposal (radians).
pub const STEP_SIZE: f64 = 0.5;
/// Independent chains per estimate.
pub const CHAINS: u64 = 8;
/// Batches per chain for batch-means standard errors.
pub const BATCHES_PER_CHAIN: u64 = 25;

pub fn burn_in(n: usize) -> u64 {
    BURN_IN_PER_ANGLE * n as u64
}

/// Eigenvalue angles of one CUE draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    pub angles: Vec<f64>,
    pub seed: u64,
    pub sweeps_performed: u64,
}

/// A Metropolis chain on the CUE angle density.
#[derive(Debug, Clone)]
pub struct MetropolisChain {
    angles: Vec<f64>,
    rng: ChaCha8Rng,
    step: Normal<f64>,
    sweeps: u64,
    proposals: u64,
    accepted: u64,
}

fn log_pair(a: f64, b: f64) -> f64 {
    // ln |e^{ia} - e^{ib}|² = 2 ln |2 sin((a - b)/2)|
    2.0 * (2.0 * ((a - b) / 2.0).sin()).abs().ln()
}

impl MetropolisChain {
    pub fn new(n: usize, seed: u64, stream: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let angles = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
        Ok(Self {
            angles,
            rng,
            step: Normal::new(0.0, STEP_SIZE).expect("positive step"),
            sweeps: 0,
            proposals: 0,
            accepted: 0,
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    /// One proposal per angle.
    pub fn sweep(&mut self) {
        for j in 0..self.angles.len() {
            let old = self.angles[j];
            let proposal = if self.rng.random::<bool>() {
                self.rng.random::<f64>() * TAU
            } else {
                (old + self.step.sample(&mut self.rng)).rem_euclid(TAU)
            };
            let mut delta = 0.0;
            for (q, &other) in self.angles.iter().enumerate() {
                if q != j {
                    delta += log_pair(proposal, other) - log_pair(old, other);
                }
            }
            self.proposals += 1;
            // delta = NaN only if both configurations are degenerate
            if delta >= 0.0 || self.rng.random::<f64>() < delta.exp() {
                self.angles[j] = proposal;
                self.accepted += 1;
            }
        }
        self.sweeps += 1;
    }
}

/// Run one chain for `sweeps` sweeps and return its final state.
pub fn sample_spectrum(n: usize, seed: u64, sweeps: u64) -> Result<SpectrumSample> {
    if sweeps < burn_in(n) {
        return Err(Error::InvalidArgument(format!(
            "sweeps={sweeps} is below the burn-in threshold {} for N={n}",
            burn_in(n)
        )));
    }
    let mut chain = MetropolisChain::new(n, seed, 0)?;
    for _ in 0..sweeps {
        chain.sweep();
    }
    Ok(SpectrumSample {
        angles: chain.angles,
        seed,
        sweeps_performed: sweeps,
    })
}

/// Whether every `m θ_j` lands in the arc `[-πε, πε]` around 1.
pub fn arc_event_angles(angles: &[f64], m: u32, epsilon: f64) -> bool {
    let half = PI * epsilon;
    angles.iter().all(|&t| {
        let w = (m as f64 * t).rem_euclid(TAU);
        w <= half || w >= TAU - half
    })
}

pub fn arc_event(sample: &SpectrumSample, m: u32, epsilon: f64) -> bool {
    arc_event_angles(&sample.angles, m, epsilon)
}

/// `max_j 2 sin²(m θ_j / 2)`, the quantity bounded in the norm form of the event.
pub fn squared_sine_norm(angles: &[f64], m: u32) -> f64 {
    angles
        .iter()
        .map(|&t| 2.0 * (m as f64 * t / 2.0).sin().powi(2))
        .fold(0.0, f64::max)
}

/// `‖U^m - I‖₂ = max_j 2 |sin(m θ_j / 2)|`.
pub fn spectral_norm_distance(angles: &[f64], m: u32) -> f64 {
    angles
        .iter()
        .map(|&t| 2.0 * (m as f64 * t / 2.0).sin().abs())
        .fold(0.0, f64::max)
}

/// The event in norm form: `max_j 2 sin²(m θ_j/2) ≤ 2 sin²(πε/2)`.
pub fn arc_event_norm_form(angles: &[f64], m: u32, epsilon: f64) -> bool {
    squared_sine_norm(angles, m) <= 2.0 * (PI * epsilon / 2.0).sin().powi(2)
}

/// Mean of an observable with batch-means error bars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStatistics {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: u64,
    /// Integrated autocorrelation time (in sweeps) implied by the batch variance.
    pub autocorrelation_time: f64,
}

/// Per-chain sums over batches, merged in chain order.
#[derive(Debug, Clone, Default)]
struct ChainTally {
    batch_means: Vec<Vec<f64>>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    count: u64,
    acceptance: f64,
}

/// Run `CHAINS` chains, splitting `samples` sweeps after burn-in, and
/// record `observables(angles)` after every sweep.
fn run_chains(
    n: usize,
    samples: u64,
    seed: u64,
    width: usize,
    observables: impl Fn(&[f64], &mut [f64]) + Sync,
) -> Result<(Vec<BatchStatistics>, f64)> {
    if samples < CHAINS * BATCHES_PER_CHAIN {
        return Err(Error::InvalidArgument(format!(
            "need at least {} samples for batch means",
            CHAINS * BATCHES_PER_CHAIN
        )));
    }
    let per_chain = samples / CHAINS;
    let batch_len = per_chain / BATCHES_PER_CHAIN;
    let used_per_chain = batch_len * BATCHES_PER_CHAIN;
    let tallies = (0..CHAINS)
        .into_par_iter()
        .map(|c| -> Result<ChainTally> {
            let mut chain = MetropolisChain::new(n, seed, c)?;
            for _ in 0..burn_in(n) {
                chain.sweep();
            }
            let mut t = ChainTally {
                batch_means: vec![Vec::with_capacity(BATCHES_PER_CHAIN as usize); width],
                sum: vec![0.0; width],
                sum_sq: vec![0.0; width],
                ..Default::default()
            };
            let mut obs = vec![0.0; width];
            let mut batch = vec![0.0; width];
            for i in 0..used_per_chain {
                chain.sweep();
                observables(chain.angles(), &mut obs);
                for k in 0..width {
                    batch[k] += obs[k];
                    t.sum[k] += obs[k];
                    t.sum_sq[k] += obs[k] * obs[k];
                }
                if (i + 1) % batch_len == 0 {
                    for (means, b) in t.batch_means.iter_mut().zip(batch.iter_mut()) {
                        means.push(*b / batch_len as f64);
                        *b = 0.0;
                    }
                }
            }
            t.count = used_per_chain;
            t.acceptance = chain.acceptance_rate();
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;

    let total = used_per_chain * CHAINS;
    let acceptance = tallies.iter().map(|t| t.acceptance).sum::<f64>() / CHAINS as f64;
    let stats = (0..width)
        .map(|k| {
            let means: Vec<f64> = tallies
                .iter()
                .flat_map(|t| t.batch_means[k].iter().copied())
                .collect();
            let sum: f64 = tallies.iter().map(|t| t.sum[k]).sum();
            let sum_sq: f64 = tallies.iter().map(|t| t.sum_sq[k]).sum();
            let mean = sum / total as f64;
            let b = means.len() as f64;
            let batch_var = means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1.0);
            let var = (sum_sq / total as f64 - mean * mean).max(0.0);
            let tau = if var > 0.0 {
                batch_len as f64 * batch_var / var
            } else {
                1.0
            };
            BatchStatistics {
                mean,
                standard_error: (batch_var / b).sqrt(),
                samples: total,
                autocorrelation_time: tau,
            }
        })
        .collect();
    Ok((stats, acceptance))
}

/// Monte Carlo estimate of `P(all eigenvalues of U^m lie in the arc)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub samples_used: u64,
    pub autocorrelation_time: f64,
    pub acceptance_rate: f64,
    pub chains: u64,
}

/// Below this exact probability the estimator is reported as unreliable.
pub const SMALL_PROBABILITY: f64 = 1e-3;

pub fn estimate_power_gap_probability(
    n: usize,
    m: u32,
    epsilon: f64,
    samples: u64,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    let config = ArcConfiguration::new(m, epsilon)?;
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let exact = log_det(&config, n)?.value.exp();
    if exact < SMALL_PROBABILITY {
        log::warn!(
            "exact probability {exact:e} < {SMALL_PROBABILITY:e} for N={n}, m={m}, epsilon={epsilon}: \
             the Monte Carlo estimate will be dominated by noise"
        );
    }
    let (stats, acceptance) = run_chains(n, samples, seed, 1, |angles, out| {
        out[0] = if arc_event_angles(angles, m, epsilon) {
            1.0
        } else {
            0.0
        };
    })?;
    let s = &stats[0];
    Ok(ProbabilityEstimate {
        estimate: s.mean,
        standard_error: s.standard_error,
        samples_used: s.samples,
        autocorrelation_time: s.autocorrelation_time,
        acceptance_rate: acceptance,
        chains: CHAINS,
    })
}

/// `E|Σ_k e^{ijθ_k}|²` estimated against its exact value `min(j, N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    pub n: usize,
    pub j: u32,
    pub expected: f64,
    pub mean: f64,
    pub standard_error: f64,
}

impl MomentResult {
    /// Deviation in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.mean - self.expected).abs() / self.standard_error
    }
}

pub fn power_sum_sq(angles: &[f64], j: u32) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for &t in angles {
        let (s, c) = (j as f64 * t).sin_cos();
        re += c;
        im += s;
    }
    re * re + im * im
}

/// Power-sum moments `j = 1..=j_max` for one `N`.
pub fn moment_check(n: usize, j_max: u32, samples: u64, seed: u64) -> Result<Vec<MomentResult>> {
    let (stats, _) = run_chains(n, samples, seed, j_max as usize, |angles, out| {
        for (k, o) in out.iter_mut().enumerate() {
            *o = power_sum_sq(angles, k as u32 + 1);
        }
    })?;
    Ok(stats
        .into_iter()
        .enumerate()
        .map(|(k, s)| {
            let j = k as u32 + 1;
            MomentResult {
                n,
                j,
                expected: (j as usize).min(n) as f64,
                mean: s.mean,
                standard_error: s.standard_error,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_examples() {
        assert!(arc_event_angles(&[0.0, 0.0, 0.0], 3, 0.1));
        assert!(!arc_event_angles(&[PI], 1, 0.5));
        for m in 1..=9 {
            assert!(arc_event_angles(&[TAU / m as f64], m, 0.01));
        }
        let s = SpectrumSample {
            angles: vec![0.0],
            seed: 0,
            sweeps_performed: 0,
        };
        assert!(arc_event(&s, 4, 0.3));
    }

    #[test]
    fn norm_forms_agree_with_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let n = rng.random_range(1..=6);
            let m = rng.random_range(1..=7);
            let eps = rng.random_range(0.01..0.99);
            let angles: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
            let a = arc_event_angles(&angles, m, eps);
            assert_eq!(a, arc_event_norm_form(&angles, m, eps));
            let threshold = 2.0 * (PI * eps / 2.0).sin();
            assert_eq!(a, spectral_norm_distance(&angles, m) <= threshold);
        }
    }

    #[test]
    fn sampler_is_deterministic_and_validated() {
        assert!(sample_spectrum(4, 1, 10).is_err());
        let a = sample_spectrum(4, 11, 400).unwrap();
        let b = sample_spectrum(4, 11, 400).unwrap();
        assert_eq!(a, b);
        assert!(a.angles.iter().all(|&t| (0.0..TAU).contains(&t)));
        assert_ne!(a, sample_spectrum(4, 12, 400).unwrap());
    }

    #[test]
    fn single_angle_is_uniform() {
        // Kolmogorov–Smirnov at the 1% level on independent chains
        let count = 100_000usize;
        let mut xs: Vec<f64> = (0..count as u64)
            .into_par_iter()
            .map(|s| sample_spectrum(1, s, burn_in(1)).unwrap().angles[0] / TAU)
            .collect();
        xs.sort_by(f64::total_cmp);
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let lo = x - i as f64 / count as f64;
                let hi = (i + 1) as f64 / count as f64 - x;
                lo.max(hi)
            })
            .fold(0.0, f64::max);
        assert!(d < 1.628 / (count as f64).sqrt(), "KS statistic {d}");
    }

    #[test]
    fn first_two_moments_for_four_angles() {
        for r in moment_check(4, 2, 200_000, 3).unwrap() {
            assert!(r.z_score() < 3.0, "{r:?}");
        }
    }

    #[test]
    fn estimate_is_deterministic() {
        let a = estimate_power_gap_probability(3, 2, 0.7, 20_000, 5).unwrap();
        let b = estimate_power_gap_probability(3, 2, 0.7, 20_000, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.standard_error > 0.0 && a.autocorrelation_time > 0.0);
        assert!(estimate_power_gap_probability(3, 2, 0.7, 10, 5).is_err());
    }

    #[test]
    fn independent_angles_when_m_exceeds_n() {
        let e = estimate_power_gap_probability(4, 5, 0.8, 200_000, 1).unwrap();
        assert!(
            (e.estimate - 0.4096).abs() < 3.0 * e.standard_error,
            "{e:?}"
        );
    }
}
