//! Toeplitz determinants of m-fold symmetric arc indicators.
//!
//! `D_N(m, ε)` is the determinant of the `N × N` Toeplitz matrix built from
//! the Fourier coefficients of the indicator of `m` equally spaced arcs of
//! total measure `2πε`. It equals the probability that every eigenvalue of
//! a Haar unitary lies in the arcs, and also that every eigenvalue of
//! `U^m` lies in the single arc `[-πε, πε]`.
//!
//! * [`symbol`] — arc configurations, Fourier coefficients, Toeplitz matrices.
//! * [`logdet`] — Levinson–Durbin with precision escalation; dense oracle.
//! * [`factorize`] — reduction to one-interval determinants.
//! * [`asymptotics`] — the large-`N` series and free energies.
//! * [`harness`] — residual scans, free-energy fits, sign resolution, output.
//! * [`cue_mc`] — Metropolis sampling of CUE eigenvalue angles.
//! * [`validation`] — invariant suites used by the self-test.
//!
//! Kernels are generic over [`scalar::Real`] and run at `f64`,
//! double-double or MPFR precision.

pub mod asymptotics;
pub mod constants;
pub mod cue_mc;
pub mod error;
pub mod factorize;
pub mod harness;
pub mod logdet;
pub mod scalar;
pub mod symbol;
pub mod validation;

pub use asymptotics::{
    free_energy, multi_arc_expansion, n_form_expansion, one_interval_expansion, AsymptoticSeries,
    FreeEnergyTable, SeriesOptions,
};
pub use constants::{ConstantSign, MathConstants};
pub use error::{Error, Result};
pub use factorize::{euclidean_split, log_det_factorized, EuclideanSplit};
pub use harness::{
    emit_results, fit_free_energy, residual_scan, resolve_constant_sign, FitResult, Format,
    ResidualRecord,
};
pub use logdet::{log_det, log_det_dense_oracle, LogDetResult, Method};
pub use scalar::{BigReal, DoubleDouble, Precision, Real};
pub use symbol::{build_matrix, fourier_coefficient, ArcConfiguration, ToeplitzMatrix};

/// Toeplitz matrix in double precision.
pub type Toeplitz64 = ToeplitzMatrix<f64>;
/// Toeplitz matrix in double-double precision.
pub type ToeplitzDD = ToeplitzMatrix<DoubleDouble>;
/// Toeplitz matrix in MPFR precision.
pub type ToeplitzBig = ToeplitzMatrix<BigReal>;
/// Series skeleton with double coefficients.
pub type SkeletonF64 = asymptotics::SeriesSkeleton<f64>;
/// Series skeleton with exact rational coefficients.
pub type SkeletonExact = asymptotics::SeriesSkeleton<num_rational::BigRational>;
