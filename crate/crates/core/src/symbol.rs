//! The m-fold symmetric arc indicator and its Toeplitz matrices.
//!
//! The arc set is the union of `m` arcs of width `2πε/m` centred at the
//! m-th roots of unity. Its Fourier coefficients vanish off multiples of
//! `m`, and on multiples `k = jm` they coincide with the coefficients of the
//! single interval `[-πε, πε]` at index `j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// The pair `(m, ε)`: number of arcs and total arc fraction of the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcConfiguration {
    m: u32,
    epsilon: f64,
}

impl ArcConfiguration {
    pub fn new(m: u32, epsilon: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        Ok(Self { m, epsilon })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The single interval `[-πε, πε]` at the same ε.
    pub fn one_interval(&self) -> Self {
        Self {
            m: 1,
            epsilon: self.epsilon,
        }
    }

    /// Total angular measure of the arc set, `2πε` for every `m`.
    pub fn measure(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.epsilon
    }

    /// The arcs as `(centre, half_width)` pairs in radians.
    pub fn arcs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let m = self.m as f64;
        let half = std::f64::consts::PI * self.epsilon / m;
        (0..self.m).map(move |k| (2.0 * std::f64::consts::PI * k as f64 / m, half))
    }

    /// Whether angle `theta` (any real) lies in the arc set.
    pub fn contains(&self, theta: f64) -> bool {
        let tau = 2.0 * std::f64::consts::PI;
        let sector = tau / self.m as f64;
        let local = (theta + sector / 2.0).rem_euclid(sector) - sector / 2.0;
        local.abs() <= std::f64::consts::PI * self.epsilon / self.m as f64
    }
}

/// Fourier coefficient `t_k` of the arc indicator, in double precision.
pub fn fourier_coefficient(config: &ArcConfiguration, k: i64) -> f64 {
    fourier_coefficient_in::<f64>(config, k)
}

/// Fourier coefficient `t_k` evaluated in the working format `T`.
///
/// `t_0 = ε`, `t_k = 0` unless `m | k`, and `t_{jm} = sin(πεj)/(πj)`.
pub fn fourier_coefficient_in<T: Real>(config: &ArcConfiguration, k: i64) -> T {
    let m = config.m as i64;
    if k % m != 0 {
        return T::zero();
    }
    let j = (k / m).abs();
    let eps = T::lit(config.epsilon);
    if j == 0 {
        return eps;
    }
    let pij = T::pi() * T::from_int(j);
    (pij.clone() * eps).sin() / pij
}

/// Symmetric Toeplitz matrix stored by its first row.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzMatrix<T> {
    first_row: Vec<T>,
}

impl<T: Real> ToeplitzMatrix<T> {
    pub fn from_first_row(first_row: Vec<T>) -> Result<Self> {
        if first_row.is_empty() {
            return Err(Error::InvalidArgument(
                "Toeplitz matrix order must be at least 1".into(),
            ));
        }
        Ok(Self { first_row })
    }

    pub fn order(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[T] {
        &self.first_row
    }

    /// Entry `(p, q)`, 0-based.
    pub fn get(&self, p: usize, q: usize) -> T {
        self.first_row[p.abs_diff(q)].clone()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.order();
        (0..n)
            .map(|p| (0..n).map(|q| self.get(p, q)).collect())
            .collect()
    }
}

/// Toeplitz matrix of order `n` for the arc symbol, in working format `T`.
pub fn build_matrix_in<T: Real>(config: &ArcConfiguration, n: usize) -> Result<ToeplitzMatrix<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "matrix order N must be at least 1 (D_0 = 1 is handled by log_det)".into(),
        ));
    }
    ToeplitzMatrix::from_first_row(
        (0..n as i64)
            .map(|k| fourier_coefficient_in::<T>(config, k))
            .collect(),
    )
}

pub fn build_matrix(config: &ArcConfiguration, n: usize) -> Result<ToeplitzMatrix<f64>> {
    build_matrix_in::<f64>(config, n)
}
