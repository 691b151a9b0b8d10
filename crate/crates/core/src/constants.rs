//! `ζ'(-1)` and the one-interval constant term `(1/12) ln 2 ± 3ζ'(-1)`.
//!
//! `ζ'(-1) = 1/12 - ln A` with `A` the Glaisher–Kinkelin constant. It is
//! computed here by two unrelated Euler–Maclaurin routes, each at the working
//! precision of `T`:
//!
//! * from `ln A = lim Σ_{k≤n} k ln k - (n²/2 + n/2 + 1/12) ln n + n²/4`;
//! * from `ζ'(-1) = (1 - γ - ln 2π)/12 + ζ'(2)/(2π²)`, with `γ` and
//!   `ζ'(2) = -Σ ln k / k²` summed separately.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::scalar::Real;

/// `ζ'(-1)` to 40 significant digits.
pub const ZETA_PRIME_MINUS_ONE_STR: &str = "-0.1654211437004509292139196602427806427640";

/// `ζ'(-1)` rounded to double.
pub const ZETA_PRIME_MINUS_ONE: f64 = -0.165_421_143_700_450_93;

/// Bernoulli numbers `B_0 … B_n` (with `B_1 = -1/2`), exact. Cached.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    static CACHE: std::sync::Mutex<Vec<BigRational>> = std::sync::Mutex::new(Vec::new());
    let mut b = CACHE.lock().unwrap_or_else(|p| p.into_inner());
    if b.is_empty() {
        b.push(BigRational::one());
    }
    // B_k = -1/(k+1) Σ_{j<k} C(k+1, j) B_j
    for k in b.len()..=n {
        let mut binom = BigInt::one(); // C(k+1, 0)
        let mut acc = BigRational::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += BigRational::from_integer(binom.clone()) * bj;
            binom = binom * BigInt::from(k + 1 - j) / BigInt::from(j + 1);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(k + 1)));
    }
    b[..=n].to_vec()
}

fn rational<T: Real>(r: &BigRational) -> T {
    T::from_ratio(r.numer(), r.denom())
}

/// Terms to keep and cut-off index so the asymptotic tail is below `2^-bits`.
fn em_plan(bits: u32) -> (usize, usize) {
    // n ~ bits/4 keeps the optimal truncation index far beyond what we need
    let n = (bits as usize / 4).max(10);
    let terms = (bits as usize / 6).max(12);
    (n, terms)
}

/// `ζ'(-1)` via the Glaisher–Kinkelin limit.
pub fn zeta_prime_minus_one_glaisher<T: Real>() -> T {
    let (n, terms) = em_plan(T::precision_bits());
    let bern = bernoulli_numbers(2 * terms + 2);
    let nt = T::from_int(n as i64);
    let ln_n = nt.ln();

    let mut sum = T::zero();
    for k in 2..=n {
        let kt = T::from_int(k as i64);
        sum += kt.clone() * kt.ln();
    }
    let n2 = nt.clone() * nt.clone();
    let mut ln_a = sum
        - (n2.clone() / T::from_int(2) + nt.clone() / T::from_int(2) + T::one() / T::from_int(12))
            * ln_n
        + n2 / T::from_int(4);
    // + Σ_{j≥2} B_{2j} (2j-3)! / (2j)! · n^{-(2j-2)}  =  B_{2j} / ((2j)(2j-1)(2j-2)) · n^{2-2j}
    let mut inv_pow = T::one() / (nt.clone() * nt.clone());
    let inv_n2 = inv_pow.clone();
    for j in 2..=terms {
        let j2 = 2 * j as i64;
        let coeff =
            &bern[2 * j] / BigRational::from_integer(BigInt::from(j2 * (j2 - 1) * (j2 - 2)));
        ln_a += rational::<T>(&coeff) * inv_pow.clone();
        inv_pow *= inv_n2.clone();
    }
    T::one() / T::from_int(12) - ln_a
}

/// Euler–Mascheroni constant from the harmonic numbers.
pub fn euler_gamma<T: Real>() -> T {
    let (n, terms) = em_plan(T::precision_bits());
    let bern = bernoulli_numbers(2 * terms + 2);
    let nt = T::from_int(n as i64);
    let mut h = T::zero();
    for k in 1..=n {
        h += T::one() / T::from_int(k as i64);
    }
    // γ = H_n - ln n - 1/(2n) + Σ_{j≥1} B_{2j} / (2j n^{2j})
    let mut gamma = h - nt.ln() - T::one() / (T::from_int(2) * nt.clone());
    let inv_n2 = T::one() / (nt.clone() * nt);
    let mut inv_pow = inv_n2.clone();
    for j in 1..=terms {
        let coeff = &bern[2 * j] / BigRational::from_integer(BigInt::from(2 * j as i64));
        gamma += rational::<T>(&coeff) * inv_pow.clone();
        inv_pow *= inv_n2.clone();
    }
    gamma
}

/// `ζ'(2) = -Σ_{k≥1} ln k / k²`.
pub fn zeta_prime_two<T: Real>() -> T {
    let (n, terms) = em_plan(T::precision_bits());
    let bern = bernoulli_numbers(2 * terms + 2);
    let nt = T::from_int(n as i64);
    let ln_n = nt.ln();

    let mut head = T::zero();
    for k in 2..n {
        let kt = T::from_int(k as i64);
        head += kt.ln() / (kt.clone() * kt);
    }
    // f(x) = x^-2 ln x; Σ_{k≥n} f(k) = ∫_n^∞ f + f(n)/2 - Σ_j B_{2j}/(2j)! f^{(2j-1)}(n)
    let f_n = ln_n.clone() / (nt.clone() * nt.clone());
    let integral = (ln_n.clone() + T::one()) / nt.clone();
    let mut tail = integral + f_n / T::from_int(2);

    // d^r/dx^r x^a ln x = (a)_r↓ x^{a-r} (ln x + Σ_{i<r} 1/(a-i)), a = -2
    let mut factorial = BigInt::one(); // (2j)!
    let mut idx = 0usize;
    for j in 1..=terms {
        let r = 2 * j - 1;
        while idx < 2 * j {
            idx += 1;
            factorial *= BigInt::from(idx);
        }
        // falling factorial (−2)(−3)…(−2−r+1) and harmonic-like sum
        let mut falling = BigInt::one();
        let mut harmonic = BigRational::zero();
        for i in 0..r {
            let ai = BigInt::from(-2 - i as i64);
            falling *= &ai;
            harmonic += BigRational::new(BigInt::one(), ai);
        }
        let scale = BigRational::new(falling, BigInt::one()) * &bern[2 * j]
            / BigRational::from_integer(factorial.clone());
        let x_pow = nt.powi(-2 - r as i32);
        let deriv = x_pow * (ln_n.clone() + rational::<T>(&harmonic));
        tail -= rational::<T>(&scale) * deriv;
    }
    -(head + tail)
}

/// `ζ'(-1)` via the functional equation and `ζ'(2)`.
pub fn zeta_prime_minus_one_functional<T: Real>() -> T {
    let pi = T::pi();
    let two_pi_ln = (T::from_int(2) * pi.clone()).ln();
    (T::one() - euler_gamma::<T>() - two_pi_ln) / T::from_int(12)
        + zeta_prime_two::<T>() / (T::from_int(2) * pi.clone() * pi)
}

/// `ζ'(-1)` in the working format. Uses the functional-equation route, which
/// has less cancellation than the Glaisher limit.
pub fn zeta_prime_minus_one<T: Real>() -> T {
    zeta_prime_minus_one_functional::<T>()
}

/// Sign in front of `3ζ'(-1)` in the constant term.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum ConstantSign {
    /// `(1/12) ln 2 + 3ζ'(-1)`; confirmed numerically against exact determinants.
    #[default]
    Plus,
    Minus,
}

impl ConstantSign {
    pub fn factor(self) -> i64 {
        match self {
            ConstantSign::Plus => 1,
            ConstantSign::Minus => -1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            ConstantSign::Plus => ConstantSign::Minus,
            ConstantSign::Minus => ConstantSign::Plus,
        }
    }
}

impl std::fmt::Display for ConstantSign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConstantSign::Plus => "plus",
            ConstantSign::Minus => "minus",
        })
    }
}

impl std::str::FromStr for ConstantSign {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plus" | "+" => Ok(ConstantSign::Plus),
            "minus" | "-" => Ok(ConstantSign::Minus),
            other => Err(format!("unknown constant sign '{other}' (plus|minus)")),
        }
    }
}

/// `(1/12) ln 2 ± 3ζ'(-1)`.
pub fn dyson_constant<T: Real>(sign: ConstantSign) -> T {
    T::ln2() / T::from_int(12) + T::from_int(3 * sign.factor()) * zeta_prime_minus_one::<T>()
}

/// Double-precision constants, computed once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MathConstants {
    pub zeta_prime_minus_one: f64,
    /// `(1/12) ln 2 + 3ζ'(-1)`.
    pub dyson_plus: f64,
}

impl MathConstants {
    pub fn get() -> &'static MathConstants {
        static CONSTANTS: std::sync::OnceLock<MathConstants> = std::sync::OnceLock::new();
        CONSTANTS.get_or_init(|| {
            let z = crate::scalar::with_precision(160, || {
                zeta_prime_minus_one::<crate::scalar::BigReal>().to_f64()
            });
            MathConstants {
                zeta_prime_minus_one: z,
                dyson_plus: std::f64::consts::LN_2 / 12.0 + 3.0 * z,
            }
        })
    }

    pub fn dyson(&self, sign: ConstantSign) -> f64 {
        std::f64::consts::LN_2 / 12.0 + 3.0 * sign.factor() as f64 * self.zeta_prime_minus_one
    }
}

/// `|6ζ'(-1)|`, the gap between the two sign choices.
pub fn sign_gap() -> f64 {
    (6.0 * ZETA_PRIME_MINUS_ONE).abs()
}
