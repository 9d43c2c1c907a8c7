//! Normal, chi-square(1) and fair-coin binomial tails used across the crate.
//!
//! The normal CDF goes through `libm`'s `erfc` (correct to about one ulp); the
//! quantile inverts it with `statrs`'s `erfc_inv`, which round-trips to 1e-15
//! on the range the inversion formulas touch.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI, SQRT_2};

use libm::erfc;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::ln_gamma;

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal upper tail `1 - Φ(x)` without cancellation.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile. Returns ±∞ at the endpoints.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// Upper tail of the chi-square distribution with one degree of freedom.
pub fn chi2_1_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    erfc((0.5 * x).sqrt())
}

/// `P(X >= k)` for `X ~ Binomial(n, 1/2)`, summed exactly in log space.
pub fn binom_half_sf(n: u64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if 2 * k >= n {
        upper_tail_sum(n, k)
    } else {
        // P(X >= k) = 1 - P(X >= n - k + 1) by symmetry.
        1.0 - upper_tail_sum(n, n - k + 1)
    }
}

/// `P(X = k)` for `X ~ Binomial(n, 1/2)`.
pub fn binom_half_pmf(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    ln_binom_half_pmf(n, k).exp()
}

// Below this size the pmf is formed as an explicit product, which is exact to
// a few ulps; above it the log-gamma form keeps relative error near 1e-13.
const SMALL_N: u64 = 1024;

fn ln_binom_half_pmf(n: u64, k: u64) -> f64 {
    if n <= SMALL_N {
        return small_pmf(n, k).ln();
    }
    let (n, k) = (n as f64, k as f64);
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0) - n * LN_2
}

fn small_pmf(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut value = 1.0_f64;
    let mut halvings = n;
    for j in 1..=k {
        value *= (n - k + j) as f64 / j as f64;
        while value > 1.0 && halvings > 0 {
            value *= 0.5;
            halvings -= 1;
        }
    }
    value * 0.5_f64.powi(halvings as i32)
}

// Terms are nonincreasing for k >= n/2, so the sum can stop once they stop
// contributing at double precision.
fn upper_tail_sum(n: u64, k: u64) -> f64 {
    let ln_first = ln_binom_half_pmf(n, k);
    let mut term = 1.0_f64;
    let mut acc = 1.0_f64;
    for j in k..n {
        term *= (n - j) as f64 / (j + 1) as f64;
        acc += term;
        if term < acc * 1e-18 {
            break;
        }
    }
    (ln_first + acc.ln()).exp()
}

const GL10_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL10_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Composite 10-point Gauss–Legendre rule on `[lo, hi]`.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, panels: usize) -> f64 {
    let width = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let mid = lo + (i as f64 + 0.5) * width;
        let half = 0.5 * width;
        let mut s = 0.0;
        for (x, w) in GL10_NODES.iter().zip(GL10_WEIGHTS.iter()) {
            s += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += s * half;
    }
    total
}

/// Bivariate standard normal CDF `P(Z1 <= a, Z2 <= b)` with correlation `rho`.
///
/// Uses Plackett's identity `∂Φ₂/∂ρ = φ₂` integrated from 0 to `rho` after the
/// substitution `r = sin t`, which removes the endpoint singularity at |ρ| = 1.
pub fn bvn_cdf(a: f64, b: f64, rho: f64) -> f64 {
    let rho = rho.clamp(-1.0, 1.0);
    let base = norm_cdf(a) * norm_cdf(b);
    if rho == 0.0 {
        return base;
    }
    let end = rho.asin();
    let integrand = |t: f64| {
        let (s, c) = t.sin_cos();
        let c2 = c * c;
        if c2 <= 0.0 {
            // limit at |r| = 1: density collapses onto the diagonal
            return 0.0;
        }
        (-(a * a - 2.0 * a * b * s + b * b) / (2.0 * c2)).exp()
    };
    let (lo, hi) = if end >= 0.0 { (0.0, end) } else { (end, 0.0) };
    let sign = if end >= 0.0 { 1.0 } else { -1.0 };
    let value = base + sign * integrate(integrand, lo, hi, 24) / (2.0 * PI);
    value.clamp(0.0, norm_cdf(a).min(norm_cdf(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantiles_match_reference_values() {
        assert!((norm_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((norm_quantile(0.8) - 0.841_621_233_572_914_3).abs() < 1e-12);
        assert!((norm_quantile(0.5)).abs() < 1e-15);
        assert!((norm_quantile(1e-10) + 6.361_340_902_404_056).abs() < 1e-9);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..200 {
            let p = i as f64 / 200.0;
            assert!((norm_cdf(norm_quantile(p)) - p).abs() < 1e-13, "p = {p}");
        }
    }

    #[test]
    fn chi2_tail_matches_squared_normal() {
        for x in [0.1, 1.0, 3.841_458_820_694_124, 10.0] {
            let z = f64::sqrt(x);
            assert!((chi2_1_sf(x) - 2.0 * norm_sf(z)).abs() < 1e-14);
        }
        assert!((chi2_1_sf(3.841_458_820_694_124) - 0.05).abs() < 1e-12);
    }

    fn brute_force_tail(n: u64, k: u64) -> f64 {
        let mut c: u128 = 1;
        let mut total: u128 = 0;
        for j in 0..=n {
            if j >= k {
                total += c;
            }
            c = c * (n - j) as u128 / (j + 1) as u128;
        }
        total as f64 / 2f64.powi(n as i32)
    }

    #[test]
    fn binomial_tail_matches_enumeration() {
        for n in 0..=40 {
            for k in 0..=n + 1 {
                let got = binom_half_sf(n, k);
                let want = brute_force_tail(n, k);
                assert!((got - want).abs() < 1e-14, "n={n} k={k} {got} {want}");
            }
        }
    }

    #[test]
    fn binomial_tail_large_n_stays_finite() {
        let p = binom_half_sf(100_000, 60_000);
        assert!(p >= 0.0);
        assert!(p.is_finite());
        assert!((binom_half_sf(100_000, 50_000) - 0.501_261_5).abs() < 1e-6);
    }

    #[test]
    fn bvn_special_cases() {
        assert!((bvn_cdf(0.0, 0.0, 0.5) - (0.25 + 0.5f64.asin() / (2.0 * PI))).abs() < 1e-12);
        assert!((bvn_cdf(0.3, -0.2, 0.0) - norm_cdf(0.3) * norm_cdf(-0.2)).abs() < 1e-15);
        // comonotone limit
        assert!((bvn_cdf(0.4, 0.9, 1.0) - norm_cdf(0.4)).abs() < 1e-6);
        // countermonotone limit
        let want = (norm_cdf(0.4) + norm_cdf(0.9) - 1.0).max(0.0);
        assert!((bvn_cdf(0.4, 0.9, -1.0) - want).abs() < 1e-6);
    }

    #[test]
    fn bvn_symmetric_in_arguments() {
        for &(a, b, r) in &[(0.2, -1.1, 0.7), (1.5, 0.3, -0.4), (-0.8, -0.1, 0.95)] {
            assert!((bvn_cdf(a, b, r) - bvn_cdf(b, a, r)).abs() < 1e-14);
        }
    }
}
