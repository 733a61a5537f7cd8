//! Special functions used across the crate.
//!
//! The standard normal helpers are written so that tail probabilities can be
//! carried in log space: `ln_norm_cdf` and `mills_ratio` stay accurate far
//! beyond the point where `norm_cdf` underflows.

use libm::erfc;
pub use statrs::function::beta::beta_reg;
pub use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

/// `ln(sqrt(2 pi))`.
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn ln_norm_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper-tail Mills ratio `(1 - Phi(z)) / phi(z)`.
pub fn mills_ratio(z: f64) -> f64 {
    if z < 8.0 {
        return norm_cdf(-z) / norm_pdf(z);
    }
    // Continued fraction 1/(z + 1/(z + 2/(z + 3/(z + ...)))), evaluated backwards.
    let mut tail = 0.0;
    for k in (1..=80).rev() {
        tail = k as f64 / (z + tail);
    }
    1.0 / (z + tail)
}

/// `ln Phi(x)`, accurate for large negative `x`.
pub fn ln_norm_cdf(x: f64) -> f64 {
    if x < -5.0 {
        ln_norm_pdf(x) + mills_ratio(-x).ln()
    } else {
        norm_cdf(x).ln()
    }
}

/// `ln(1 - exp(x))` for `x <= 0`.
pub fn ln_1m_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

// B_2k for k = 1..8.
const BERNOULLI: [f64; 8] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0];

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Polygamma function `psi^(n)(x)` for `n <= 3` and `x > 0`.
///
/// Upward recurrence to `x >= 20`, then the asymptotic expansion with eight
/// Bernoulli terms.
pub fn polygamma(n: u32, x: f64) -> f64 {
    assert!(n <= 3, "polygamma implemented for orders 0..=3");
    if !(x > 0.0) {
        return f64::NAN;
    }
    let sign = if n.is_multiple_of(2) { -1.0 } else { 1.0 }; // (-1)^(n+1)
    let nfact = factorial(n);
    let mut x = x;
    let mut acc = 0.0;
    while x < 20.0 {
        acc += sign * nfact / x.powi(n as i32 + 1);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let asym = if n == 0 {
        let mut s = x.ln() - 0.5 * inv;
        let mut p = inv2;
        for (k, b) in BERNOULLI.iter().enumerate() {
            s -= b / (2.0 * (k + 1) as f64) * p;
            p *= inv2;
        }
        s
    } else {
        let mut s = factorial(n - 1) * inv.powi(n as i32) + 0.5 * nfact * inv.powi(n as i32 + 1);
        let mut p = inv.powi(n as i32 + 2);
        for (k, b) in BERNOULLI.iter().enumerate() {
            let two_k = 2 * (k as u32 + 1);
            s += b * factorial(two_k + n - 1) / factorial(two_k) * p;
            p *= inv2;
        }
        sign * s
    };
    acc + asym
}

/// Gauss-Kronrod 10/21 abscissae on [-1, 1] (non-negative half, descending).
pub(crate) const GK21_NODES: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

pub(crate) const GK21_WEIGHTS: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

/// Ten-point Gauss-Legendre weights for the odd-indexed entries of `GK21_NODES`.
pub(crate) const G10_WEIGHTS: [f64; 5] =
    [0.066_671_344_308_688_14, 0.149_451_349_150_580_6, 0.219_086_362_515_982_04, 0.269_266_719_309_996_35, 0.295_524_224_714_752_87];

#[cfg(test)]
/// Ten-point Gauss-Legendre rule for `int_lo^hi f` (signed when `hi < lo`).
pub(crate) fn gauss_legendre10(lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut sum = 0.0;
    for (i, w) in G10_WEIGHTS.iter().enumerate() {
        let x = GK21_NODES[2 * i + 1] * half;
        sum += w * (f(mid - x) + f(mid + x));
    }
    sum * half
}

/// Ten-point Gauss-Legendre rule applied to several integrands sharing nodes.
pub(crate) fn gauss_legendre10_multi<const N: usize>(lo: f64, hi: f64, mut f: impl FnMut(f64) -> [f64; N]) -> [f64; N] {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut sum = [0.0; N];
    for (i, w) in G10_WEIGHTS.iter().enumerate() {
        let x = GK21_NODES[2 * i + 1] * half;
        let (p, q) = (f(mid - x), f(mid + x));
        for j in 0..N {
            sum[j] += w * (p[j] + q[j]);
        }
    }
    sum.map(|s| s * half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normal_cdf_tails() {
        assert_relative_eq!(norm_cdf(0.0), 0.5, epsilon = 1e-16);
        assert_relative_eq!(norm_cdf(2.0), 0.977_249_868_051_820_8, max_relative = 1e-14);
        // Phi(-10) = 7.61985302416e-24
        assert_relative_eq!(norm_cdf(-10.0), 7.619_853_024_160_527e-24, max_relative = 1e-12);
        // ln Phi(-40) from the asymptotic series.
        let z: f64 = 40.0;
        let series = ln_norm_pdf(z) - z.ln() + (1.0 - 1.0 / (z * z) + 3.0 / z.powi(4) - 15.0 / z.powi(6) + 105.0 / z.powi(8)).ln();
        assert_relative_eq!(ln_norm_cdf(-z), series, max_relative = 1e-12);
    }

    #[test]
    fn mills_ratio_is_continuous_at_switch() {
        let a = norm_cdf(-8.0 + 1e-9) / norm_pdf(8.0 - 1e-9);
        assert_relative_eq!(mills_ratio(8.0), a, max_relative = 1e-8);
    }

    #[test]
    fn polygamma_known_values() {
        let euler = 0.577_215_664_901_532_9;
        let pi2 = std::f64::consts::PI.powi(2);
        assert_relative_eq!(polygamma(0, 1.0), -euler, max_relative = 1e-13);
        assert_relative_eq!(polygamma(1, 1.0), pi2 / 6.0, max_relative = 1e-13);
        // psi''(1) = -2 zeta(3)
        assert_relative_eq!(polygamma(2, 1.0), -2.0 * 1.202_056_903_159_594_2, max_relative = 1e-13);
        assert_relative_eq!(polygamma(3, 1.0), pi2 * pi2 / 15.0, max_relative = 1e-13);
        assert_relative_eq!(polygamma(1, 0.5), pi2 / 2.0, max_relative = 1e-13);
        assert_relative_eq!(polygamma(0, 37.5), statrs::function::gamma::digamma(37.5), max_relative = 1e-13);
    }

    #[test]
    fn polygamma_matches_finite_differences() {
        for &x in &[0.3, 1.7, 5.0, 23.0] {
            for n in 0..3 {
                let h = 1e-5 * x;
                let fd = (polygamma(n, x + h) - polygamma(n, x - h)) / (2.0 * h);
                assert_relative_eq!(polygamma(n + 1, x), fd, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let v = gauss_legendre10(-1.0, 2.0, |x| x.powi(19) - 3.0 * x * x);
        let exact = (2f64.powi(20) - 1.0) / 20.0 - (8.0 + 1.0);
        assert_relative_eq!(v, exact, max_relative = 1e-13);
        assert_relative_eq!(gauss_legendre10(2.0, -1.0, |x| x), -1.5, epsilon = 1e-14);
    }

    #[test]
    fn ln_1m_exp_branches() {
        assert_relative_eq!(ln_1m_exp(-1e-10), (1e-10f64).ln(), max_relative = 1e-9);
        assert_relative_eq!(ln_1m_exp(-50.0), -(-50f64).exp(), max_relative = 1e-12);
    }
}
