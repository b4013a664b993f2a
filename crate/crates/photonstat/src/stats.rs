//! Statistical primitives: sample moments, normal and χ² distribution
//! functions and quantiles.
//!
//! Only what the classification and test procedures need; this is not a
//! general statistics library.

use serde::{Deserialize, Serialize};

use crate::math;
use crate::{Error, Result};

/// Sufficient statistics of a sample of real-valued counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    /// Number of observations.
    pub n: usize,
    /// Sample mean x̄.
    pub mean: f64,
    /// Biased sample variance S² (divisor n).
    pub var_biased: f64,
    /// Unbiased sample variance s² = n/(n−1) · S².
    pub var_unbiased: f64,
    /// Fourth central moment μ₄ (divisor n).
    pub m4: f64,
}

/// Two-pass centered moments with compensated accumulation.
///
/// The two-pass form keeps μ₄ of very long samples accurate where a naive
/// single-pass expansion loses precision to cancellation.
pub fn summarize(sample: &[f64]) -> Result<SampleSummary> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InsufficientSample { needed: 2, got: n });
    }
    if !sample.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("sample contains NaN or infinity"));
    }
    let mean = neumaier_sum(sample.iter().copied()) / n as f64;
    let m2 = neumaier_sum(sample.iter().map(|&x| {
        let d = x - mean;
        d * d
    }));
    let m4 = neumaier_sum(sample.iter().map(|&x| {
        let d = x - mean;
        let d2 = d * d;
        d2 * d2
    }));
    let var_biased = m2 / n as f64;
    // Defined as an exact multiple so the s² = n/(n−1)·S² identity holds
    // bit-for-bit, not just to rounding.
    let var_unbiased = var_biased * (n as f64 / (n - 1) as f64);
    Ok(SampleSummary {
        n,
        mean,
        var_biased,
        var_unbiased,
        m4: m4 / n as f64,
    })
}

/// Neumaier-compensated summation.
fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if math::abs(sum) >= math::abs(v) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Two-sided standard-normal quantile y with P(−y < Z < y) = 1 − ε.
pub fn normal_quantile(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain("epsilon must lie in (0, 1)"));
    }
    Ok(-ndtri(epsilon / 2.0))
}

/// One-sided standard-normal quantile Φ⁻¹(p).
///
/// Acklam's rational approximation refined by one Halley step against the
/// erfc-based CDF; absolute error well below 1e−13 across (0, 1).
#[allow(clippy::excessive_precision)]
pub(crate) fn ndtri(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);

    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = math::sqrt(-2.0 * math::ln(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = math::sqrt(-2.0 * math::ln_1p(-p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // One Halley refinement.
    let e = 0.5 * math::erfc(-x / core::f64::consts::SQRT_2) - p;
    let u = e * math::sqrt(2.0 * core::f64::consts::PI) * math::exp(x * x / 2.0);
    x - u / (1.0 + x * u / 2.0)
}

/// Standard-normal CDF.
pub(crate) fn norm_cdf(x: f64) -> f64 {
    0.5 * math::erfc(-x / core::f64::consts::SQRT_2)
}

/// χ² cumulative distribution function with `k` degrees of freedom,
/// i.e. the regularized lower incomplete gamma P(k/2, x/2).
pub fn chisq_cdf(x: f64, k: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::Domain("chi-square argument must be non-negative"));
    }
    if !(k >= 1.0) {
        return Err(Error::Domain("degrees of freedom must be >= 1"));
    }
    Ok(gamma_p(k / 2.0, x / 2.0))
}

/// χ² quantile: the x with `chisq_cdf(x, k) = p`.
///
/// Wilson–Hilferty start, then a bracketed Newton iteration with bisection
/// fallback; converges to ~1e−12 relative.
pub fn chisq_quantile(p: f64, k: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain("probability must lie in (0, 1)"));
    }
    if !(k >= 1.0) {
        return Err(Error::Domain("degrees of freedom must be >= 1"));
    }
    let z = ndtri(p);
    let t = 2.0 / (9.0 * k);
    let wh = 1.0 - t + z * math::sqrt(t);
    let mut x = if wh > 0.0 { k * wh * wh * wh } else { 1e-8 };
    if x <= 0.0 {
        x = 1e-300;
    }

    // Establish a bracket [lo, hi] with cdf(lo) <= p <= cdf(hi).
    let mut lo = 0.0;
    let mut hi = x.max(k) * 2.0 + 10.0;
    let mut guard = 0;
    while gamma_p(k / 2.0, hi / 2.0) < p {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::Domain("chi-square quantile bracket failed"));
        }
    }
    x = x.clamp(lo + 1e-300, hi);

    for _ in 0..200 {
        let f = gamma_p(k / 2.0, x / 2.0) - p;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let pdf = chisq_pdf(x, k);
        let mut next = if pdf > 0.0 { x - f / pdf } else { -1.0 };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = math::abs(next - x) <= 1e-13 * x.max(1e-300);
        x = next;
        if done {
            break;
        }
    }
    Ok(x)
}

/// χ² probability density function.
pub fn chisq_pdf(x: f64, k: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = k / 2.0;
    math::exp((a - 1.0) * math::ln(x) - x / 2.0 - a * core::f64::consts::LN_2 - ln_gamma(a))
}

/// ln Γ(x), Lanczos approximation (g = 7, 9 coefficients); accurate to
/// ~1e−15 relative for x > 0.
#[allow(clippy::excessive_precision)]
pub(crate) fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = core::f64::consts::PI;
        return math::ln(pi / libm::sin(pi * x)) - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = G[0];
    for (i, &g) in G.iter().enumerate().skip(1) {
        acc += g / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * math::ln(2.0 * core::f64::consts::PI) + (x + 0.5) * math::ln(t) - t + math::ln(acc)
}

/// Regularized lower incomplete gamma P(a, x).
///
/// Series for x < a + 1, continued fraction otherwise (the standard stable
/// split).
pub(crate) fn gamma_p(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    // Large degrees of freedom (GoF with n ~ 1e5 blocks) need ~sqrt(a)
    // terms near x ≈ a; the bound is generous.
    let max_iter = 20_000;
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut term = sum;
    for _ in 0..max_iter {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if math::abs(term) < math::abs(sum) * 1e-16 {
            break;
        }
    }
    sum * math::exp(-x + a * math::ln(x) - ln_gamma(a))
}

fn gamma_q_cf(a: f64, x: f64) -> f64 {
    // Modified Lentz continued fraction for Q(a, x).
    let max_iter = 20_000;
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..max_iter {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if math::abs(d) < TINY {
            d = TINY;
        }
        c = b + an / c;
        if math::abs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if math::abs(del - 1.0) < 1e-16 {
            break;
        }
    }
    math::exp(-x + a * math::ln(x) - ln_gamma(a)) * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn summarize_constant_sample() {
        let s = summarize(&[0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.var_unbiased, 0.0);
        assert_eq!(s.m4, 0.0);
    }

    #[test]
    fn summarize_hand_arithmetic() {
        // mean 2, S² = 2/3, s² = 1, μ₄ = 2/3
        let s = summarize(&[1.0, 2.0, 3.0]).unwrap();
        assert!(close(s.mean, 2.0, 1e-15));
        assert!(close(s.var_biased, 2.0 / 3.0, 1e-15));
        assert!(close(s.var_unbiased, 1.0, 1e-15));
        assert!(close(s.m4, 2.0 / 3.0, 1e-15));
    }

    #[test]
    fn summarize_rejects_short_and_nonfinite() {
        assert!(matches!(
            summarize(&[1.0]),
            Err(Error::InsufficientSample { needed: 2, got: 1 })
        ));
        assert!(matches!(
            summarize(&[1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn summarize_poisson_draws_match_distribution_moments() {
        // Statistical oracle: SD(x̄) = sqrt(λ/n), SD(s²) = sqrt((μ₄−σ⁴)/n)
        // with μ₄ = λ + 3λ² for Poisson; both 3σ bounds are far inside the
        // tolerances asserted here.
        let sample = crate::models::PhotonModel::Poisson { mean: 10.0 }
            .sample(1_000_000, 99)
            .unwrap();
        let s = summarize(&sample).unwrap();
        assert!(close(s.mean, 10.0, 0.05));
        assert!(close(s.var_unbiased, 10.0, 0.5));
    }

    #[test]
    fn unbiased_ratio_exact() {
        let mut rng = crate::rng::Rng::new(11);
        for _ in 0..50 {
            let n = 2 + (rng.next_u64() % 100) as usize;
            let sample: Vec<f64> = (0..n).map(|_| rng.uniform() * 7.0).collect();
            let s = summarize(&sample).unwrap();
            assert_eq!(
                s.var_unbiased,
                s.var_biased * (n as f64 / (n - 1) as f64)
            );
        }
    }

    #[test]
    fn normal_quantile_one_sigma() {
        // ε = 1 − erf(1/√2) leaves exactly the ±1σ band.
        let eps = 1.0 - libm::erf(1.0 / core::f64::consts::SQRT_2);
        assert!(close(normal_quantile(eps).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn normal_quantile_known_value() {
        // Frozen from numeric inversion of the two-sided Gaussian integral.
        assert!(close(normal_quantile(0.01).unwrap(), 2.5758293035489004, 1e-10));
    }

    #[test]
    fn normal_quantile_limits_and_domain() {
        assert!(normal_quantile(0.999999).unwrap() < 2e-6);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(-0.5).is_err());
    }

    #[test]
    fn normal_quantile_monotone_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 1..100 {
            let eps = i as f64 / 100.0;
            let y = normal_quantile(eps).unwrap();
            assert!(y < prev);
            prev = y;
        }
    }

    #[test]
    fn chisq_cdf_basics() {
        assert_eq!(chisq_cdf(0.0, 5.0).unwrap(), 0.0);
        assert!(chisq_cdf(-1.0, 5.0).is_err());
        // k = 2 is the exponential special case: F(x) = 1 − e^{−x/2}.
        let x = 2.0 * core::f64::consts::LN_2;
        assert!(close(chisq_cdf(x, 2.0).unwrap(), 0.5, 1e-14));
    }

    #[test]
    fn chisq_cdf_matches_trapezoid_integration() {
        // Direct numeric integration of the density as an independent oracle.
        for &(x, k) in &[(3.0, 2.0), (10.0, 9.0), (134.64, 99.0), (250.0, 200.0), (400.0, 150.0)] {
            let steps = 400_000;
            let h = x / steps as f64;
            let mut acc = 0.5 * (chisq_pdf(1e-300, k) + chisq_pdf(x, k));
            for i in 1..steps {
                acc += chisq_pdf(i as f64 * h, k);
            }
            let integral = acc * h;
            assert!(
                close(chisq_cdf(x, k).unwrap(), integral, 1e-8),
                "x={x} k={k}: {} vs {integral}",
                chisq_cdf(x, k).unwrap()
            );
        }
    }

    #[test]
    fn chisq_quantile_known_values() {
        // Frozen from bisection on chisq_cdf (cross-checked against numeric
        // integration of the density).
        assert!(close(chisq_quantile(0.99, 99.0).unwrap(), 134.64161685578915, 1e-6));
        assert!(close(chisq_quantile(0.5, 100.0).unwrap(), 99.33412923598846, 1e-6));
        // χ²₁ = Z²: quantile at P(|Z|<1) is 1.
        let p = libm::erf(1.0 / core::f64::consts::SQRT_2);
        assert!(close(chisq_quantile(p, 1.0).unwrap(), 1.0, 1e-9));
    }

    #[test]
    fn chisq_quantile_small_p_tends_to_zero() {
        assert!(chisq_quantile(1e-12, 4.0).unwrap() < 1e-2);
        assert!(chisq_quantile(0.0, 4.0).is_err());
        assert!(chisq_quantile(1.0, 4.0).is_err());
    }

    #[test]
    fn quantile_cdf_round_trips() {
        let ps = [1e-6, 1e-3, 0.01, 0.1, 0.5, 0.9, 0.99, 1.0 - 1e-3, 1.0 - 1e-6];
        for &p in &ps {
            for &k in &[1.0, 2.0, 10.0, 99.0, 1000.0, 99_999.0] {
                let q = chisq_quantile(p, k).unwrap();
                let back = chisq_cdf(q, k).unwrap();
                assert!(close(back, p, 1e-10), "chisq k={k} p={p}: {back}");
            }
            let y = normal_quantile(p).unwrap();
            // P(|Z| > y) = erfc(y/√2) recovers ε.
            let back = libm::erfc(y / core::f64::consts::SQRT_2);
            assert!(close(back, p, 1e-10), "normal p={p}: {back}");
        }
    }

    #[test]
    fn chisq_quantile_strictly_increasing_in_p() {
        let k = 37.0;
        let mut prev = 0.0;
        for i in 1..60 {
            let p = i as f64 / 60.0;
            let q = chisq_quantile(p, k).unwrap();
            assert!(q > prev);
            prev = q;
        }
    }

    #[test]
    fn neumaier_handles_cancellation() {
        let v = vec![1e16, 1.0, -1e16];
        assert_eq!(neumaier_sum(v.into_iter()), 1.0);
    }
}
