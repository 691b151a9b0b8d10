//! Reduction of the m-arc determinant to one-interval determinants.
//!
//! With `N = n1·m + n2`, reordering indices by residue mod `m` makes the arc
//! matrix block diagonal: `n2` blocks of size `n1 + 1` and `m - n2` blocks of
//! size `n1`, each equal to the one-interval matrix. Hence
//! `ln D_N(m, ε) = (m - n2) ln D_{n1} + n2 ln D_{n1+1}` with the one-interval
//! symbol `1_[-πε, πε]`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::logdet::{log_det, LogDetResult, Method};
use crate::symbol::ArcConfiguration;

/// Quotient and remainder of `N` by `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EuclideanSplit {
    pub n: usize,
    pub m: u32,
    pub n1: usize,
    pub n2: usize,
}

pub fn euclidean_split(n: usize, m: u32) -> EuclideanSplit {
    assert!(m >= 1, "m must be positive");
    let mu = m as usize;
    EuclideanSplit {
        n,
        m,
        n1: n / mu,
        n2: n % mu,
    }
}

/// Permutation sorting `0..n` by residue mod `m` (stable within a class).
pub fn residue_permutation(n: usize, m: u32) -> Vec<usize> {
    let mu = m as usize;
    (0..mu).flat_map(|r| (r..n).step_by(mu)).collect()
}

/// Block sizes, in the order produced by [`residue_permutation`].
pub fn block_sizes(n: usize, m: u32) -> Vec<usize> {
    let split = euclidean_split(n, m);
    (0..m as usize)
        .map(|r| if r < split.n2 { split.n1 + 1 } else { split.n1 })
        .collect()
}

/// `ln D_N(m, ε)` through the one-interval factorization.
pub fn log_det_factorized(config: &ArcConfiguration, n: usize) -> Result<LogDetResult> {
    let split = euclidean_split(n, config.m());
    let single = config.one_interval();
    let (small, large) = if split.n2 == 0 {
        (log_det(&single, split.n1)?, None)
    } else {
        let (a, b) = rayon::join(
            || log_det(&single, split.n1),
            || log_det(&single, split.n1 + 1),
        );
        (a?, Some(b?))
    };

    let weight_small = (config.m() as usize - split.n2) as f64;
    let mut value = weight_small * small.value;
    let mut error = weight_small * small.error_estimate;
    let mut bits = small.working_precision_bits;
    let mut min_ratio = small.min_pivot_ratio;
    let mut method = small.method;
    if let Some(large) = &large {
        value += split.n2 as f64 * large.value;
        error += split.n2 as f64 * large.error_estimate;
        bits = bits.max(large.working_precision_bits);
        min_ratio = min_ratio.min(large.min_pivot_ratio);
        if large.method == Method::Levinson {
            method = Method::Levinson;
        }
    }
    Ok(LogDetResult {
        value,
        n,
        config: *config,
        method,
        working_precision_bits: bits,
        min_pivot_ratio: min_ratio,
        error_estimate: error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::build_matrix;

    fn cfg(m: u32, eps: f64) -> ArcConfiguration {
        ArcConfiguration::new(m, eps).unwrap()
    }

    #[test]
    fn split_examples() {
        assert_eq!(
            euclidean_split(23, 5),
            EuclideanSplit {
                n: 23,
                m: 5,
                n1: 4,
                n2: 3
            }
        );
        assert_eq!(euclidean_split(100, 5).n1, 20);
        assert_eq!(euclidean_split(100, 5).n2, 0);
        let s = euclidean_split(4, 7);
        assert_eq!((s.n1, s.n2), (0, 4));
    }

    #[test]
    fn degenerate_case_is_eps_power() {
        let r = log_det_factorized(&cfg(7, 0.4), 4).unwrap();
        assert!((r.value - 4.0 * 0.4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn single_arc_reduces_to_direct() {
        for n in [1usize, 7, 33] {
            let c = cfg(1, 0.45);
            let f = log_det_factorized(&c, n).unwrap();
            let d = log_det(&c, n).unwrap();
            assert_eq!(f.value, d.value);
        }
    }

    #[test]
    fn five_arcs_n23() {
        let c = cfg(5, 0.5);
        let f = log_det_factorized(&c, 23).unwrap();
        let d = log_det(&c, 23).unwrap();
        assert!((f.value - d.value).abs() <= 1e-9);
    }

    #[test]
    fn permuted_matrix_is_block_diagonal_with_one_interval_blocks() {
        for m in 1..=6u32 {
            for n in [1usize, 5, 13, 20] {
                let c = cfg(m, 0.3);
                let full = build_matrix(&c, n).unwrap();
                let single = build_matrix(&c.one_interval(), n.div_ceil(m as usize)).unwrap();
                let perm = residue_permutation(n, m);
                let sizes = block_sizes(n, m);
                assert_eq!(sizes.iter().sum::<usize>(), n);
                let mut starts = vec![0usize];
                for s in &sizes {
                    starts.push(starts.last().unwrap() + s);
                }
                let block_of = |i: usize| starts.iter().rposition(|&s| s <= i).unwrap();
                for i in 0..n {
                    for j in 0..n {
                        let entry = full.get(perm[i], perm[j]);
                        let (bi, bj) = (block_of(i), block_of(j));
                        if bi != bj {
                            assert_eq!(entry, 0.0, "m={m} n={n} ({i},{j})");
                        } else {
                            let (li, lj) = (i - starts[bi], j - starts[bj]);
                            assert_eq!(entry, single.get(li, lj), "m={m} n={n} ({i},{j})");
                        }
                    }
                }
                // blocks of size n1+1 come first, matching the remainder count
                let split = euclidean_split(n, m);
                assert_eq!(
                    sizes.iter().filter(|&&s| s == split.n1 + 1).count(),
                    split.n2
                );
            }
        }
    }
}
