//! Closed-form design metrics of a time-bin QRNG and the second-order
//! correlation ↔ count-variance relation.
//!
//! Everything is a pure function of the load x = μ·T·d and the bin count,
//! except the rate/cost/cycle quantities that also need the raw physical
//! parameters. Entropies are in bits.

use serde::{Deserialize, Serialize};

use crate::math;
use crate::models::TimeBinPmf;
use crate::{Error, Result};

const LOG2_E: f64 = core::f64::consts::LOG2_E;

fn check_load(load: f64) -> Result<()> {
    if !(load > 0.0) || !load.is_finite() {
        return Err(Error::Domain("load must be positive"));
    }
    Ok(())
}

fn check_bins(bins: u32) -> Result<()> {
    if bins < 2 {
        return Err(Error::Domain("need at least 2 bins"));
    }
    Ok(())
}

/// Shannon entropy −Σ p log₂ p of an arbitrary distribution (zero terms
/// are skipped).
pub fn entropy_bits<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    let mut h = 0.0;
    for p in probs {
        if p > 0.0 {
            h -= p * math::log2(p);
        }
    }
    h
}

/// Closed-form Shannon entropy of the time-bin symbol distribution.
///
/// With a = x/N, the mean bin index is
/// (1 − (N+1)e^{−x} + N e^{−x−a}) / ((1 − e^{−x})(1 − e^{−a})) and
/// H = that · a·log₂e − log₂((e^a − 1)/(1 − e^{−x})).
/// The numerator cancels to O(x²) as x → 0 and is evaluated through expm1
/// to keep the uniform limit (→ log₂ N) accurate to machine precision.
pub fn shannon_entropy_closed(load: f64, bins: u32) -> Result<f64> {
    check_load(load)?;
    check_bins(bins)?;
    let n = bins as f64;
    let a = load / n;
    let one_m_ex = -math::expm1(-load); // 1 − e^{−x}
    let one_m_ea = -math::expm1(-a); // 1 − e^{−a}
    let numerator = one_m_ex + n * math::exp(-load) * math::expm1(-a);
    let mean_index = numerator / (one_m_ex * one_m_ea);
    let ln_c = math::ln(math::expm1(a)) - math::ln(one_m_ex);
    Ok(mean_index * a * LOG2_E - ln_c * LOG2_E)
}

/// Closed-form min-entropy −log₂ f(1) of the time-bin symbol distribution:
/// −log₂[(1 − e^{−x/N}) / (1 − e^{−x})]. f is decreasing, so f(1) is the
/// modal probability.
pub fn min_entropy_closed(load: f64, bins: u32) -> Result<f64> {
    check_load(load)?;
    check_bins(bins)?;
    let a = load / bins as f64;
    Ok((math::ln(-math::expm1(-load)) - math::ln(-math::expm1(-a))) * LOG2_E)
}

/// Distance from uniform: half the L1 distance between the PMF and the
/// uniform distribution on its bins. This is the defining quantity; the
/// closed form below is an approximation to it.
pub fn epsilon_exact(pmf: &TimeBinPmf) -> f64 {
    let u = 1.0 / pmf.n_bins as f64;
    0.5 * pmf.probs.iter().map(|&p| math::abs(p - u)).sum::<f64>()
}

/// Closed-form ε(x) = ½·(1 − e^{−x/2})/(1 + e^{−x/2}) = ½·tanh(x/4).
///
/// The derivation splits the L1 sum at bin N/2, which is exact only while
/// the PMF crosses 1/N between bins N/2 and N/2+1; for N = 256 that means
/// x ≲ 12/N ≈ 0.05. Beyond that the closed form undershoots
/// [`epsilon_exact`] by ≈ x³/1152 (N large), e.g. 5.5e−5 at x = 0.4.
pub fn epsilon_closed(load: f64) -> Result<f64> {
    check_load(load)?;
    Ok(0.5 * math::tanh(load / 4.0))
}

/// Invert [`epsilon_closed`]: x = 2·ln((1+2ε)/(1−2ε)) = 4·atanh(2ε).
pub fn load_from_epsilon(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Domain("epsilon must lie in (0, 1/2)"));
    }
    Ok(4.0 * math::atanh(2.0 * epsilon))
}

/// Probability of a cycle with no detection: P(0) = e^{−x}.
pub fn empty_cycle_prob(load: f64) -> Result<f64> {
    check_load(load)?;
    Ok(math::exp(-load))
}

/// Expected number of reference cycles to collect `k_bits` of raw output:
/// N_c = k′ / (1 − e^{−x}) with k′ = ⌈k / log₂N⌉ (the cycle count is
/// negative-binomial with success probability 1 − e^{−x}).
pub fn expected_cycles(k_bits: u64, bins: u32, load: f64) -> Result<f64> {
    check_load(load)?;
    check_bins(bins)?;
    if k_bits < 1 {
        return Err(Error::Domain("need at least one bit"));
    }
    let bits_per_symbol = math::log2(bins as f64);
    let k_sym = math::ceil(k_bits as f64 / bits_per_symbol);
    Ok(k_sym / -math::expm1(-load))
}

/// Raw-bit generation rate.
///
/// Exact: (1 − e^{−μTd})/T · log₂N. With `approx`, the small-T limit
/// μ·d·log₂N; the exact rate never exceeds it (1 − e^{−x} ≤ x).
pub fn generation_rate(mu: f64, cycle: f64, efficiency: f64, bins: u32, approx: bool) -> Result<f64> {
    if !(mu > 0.0 && cycle > 0.0 && efficiency > 0.0) {
        return Err(Error::Domain("rate parameters must be positive"));
    }
    check_bins(bins)?;
    let bits = math::log2(bins as f64);
    if approx {
        Ok(mu * efficiency * bits)
    } else {
        let x = mu * cycle * efficiency;
        Ok(-math::expm1(-x) / cycle * bits)
    }
}

/// Minimum reference cycle keeping the misregistration tolerance:
/// T_min = N · k_tol · δ_t with k_tol = 2/p_tol.
pub fn min_reference_cycle(bins: u32, p_tol: f64, delta_t: f64) -> Result<f64> {
    check_bins(bins)?;
    if !(p_tol > 0.0 && p_tol < 1.0) {
        return Err(Error::Domain("p_tol must lie in (0, 1)"));
    }
    if !(delta_t > 0.0) {
        return Err(Error::Domain("delta_t must be positive"));
    }
    Ok(bins as f64 * (2.0 / p_tol) * delta_t)
}

/// Maximum rate at a given ε-randomness when the cycle is pinned to its
/// minimum: r_max = 2·log₂N/(N·k_tol·δ_t) · ln((1+2ε)/(1−2ε)).
pub fn max_rate(epsilon: f64, bins: u32, k_tol: f64, delta_t: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Domain("epsilon must lie in (0, 1/2)"));
    }
    check_bins(bins)?;
    if !(k_tol > 0.0 && delta_t > 0.0) {
        return Err(Error::Domain("k_tol and delta_t must be positive"));
    }
    let bits = math::log2(bins as f64);
    Ok(2.0 * bits / (bins as f64 * k_tol * delta_t) * 2.0 * math::atanh(2.0 * epsilon))
}

/// Min-entropy as a function of ε:
/// log₂[ 8ε / ((1+2ε)²·(1 − ((1−2ε)/(1+2ε))^{2/N})) ].
///
/// Equals `min_entropy_closed(load_from_epsilon(ε), N)` identically.
pub fn min_entropy_of_epsilon(epsilon: f64, bins: u32) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Domain("epsilon must lie in (0, 1/2)"));
    }
    check_bins(bins)?;
    // ln ratio = ln(1−2ε) − ln(1+2ε), kept in log space for small ε.
    let ln_ratio = math::ln_1p(-2.0 * epsilon) - math::ln_1p(2.0 * epsilon);
    let denom = -math::expm1(2.0 / bins as f64 * ln_ratio); // 1 − ratio^{2/N}
    let num = 8.0 * epsilon / ((1.0 + 2.0 * epsilon) * (1.0 + 2.0 * epsilon));
    Ok(math::log2(num / denom))
}

/// Hardware cost model: α/μ + β·d (heavier attenuation is expensive, so is
/// a more efficient detector).
pub fn cost(mu: f64, efficiency: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(mu > 0.0 && efficiency > 0.0 && alpha > 0.0 && beta > 0.0) {
        return Err(Error::Domain("cost parameters must be positive"));
    }
    Ok(alpha / mu + beta * efficiency)
}

/// Output length an extractor may keep from `n_raw_bits` of raw output:
/// m = ⌊n · H_min / log₂N⌋.
pub fn required_compression(min_entropy_bits: f64, bins: u32, n_raw_bits: u64) -> Result<u64> {
    check_bins(bins)?;
    if !(min_entropy_bits >= 0.0) {
        return Err(Error::Domain("min-entropy must be non-negative"));
    }
    let ratio = min_entropy_bits / math::log2(bins as f64);
    Ok(math::floor(n_raw_bits as f64 * ratio.min(1.0)) as u64)
}

/// Count-variance excess over Poisson from the second-order correlation:
/// ⟨(ΔN)²⟩ − ⟨N⟩ = ⟨N⟩²/T² ∫_{−T}^{T} (T − |τ|)(g²(τ) − 1) dτ,
/// integrated by adaptive Simpson (absolute tolerance 1e−10, relative
/// 1e−8). Negative results indicate sub-Poissonian counting statistics.
pub fn mandel_excess_from_g2<F: Fn(f64) -> f64>(
    g2: F,
    mean_count: f64,
    window: f64,
) -> Result<f64> {
    if !(window > 0.0) || !window.is_finite() {
        return Err(Error::Domain("window must be positive"));
    }
    let integrand = |tau: f64| (window - math::abs(tau)) * (g2(tau) - 1.0);
    // Split at the |τ| kink.
    let left = adaptive_simpson(&integrand, -window, 0.0)?;
    let right = adaptive_simpson(&integrand, 0.0, window)?;
    Ok(mean_count * mean_count / (window * window) * (left + right))
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<f64> {
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite("integrand value"))
        }
    };
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (eval(a)?, eval(m)?, eval(b)?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, fa, m, fm, b, fb, whole, 1e-10, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !flm.is_finite() || !frm.is_finite() {
        return Err(Error::NonFinite("integrand value"));
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let scale = tol.max(1e-8 * math::abs(left + right));
    if depth == 0 || math::abs(delta) <= 15.0 * scale {
        return Ok(left + right + delta / 15.0);
    }
    Ok(
        simpson_step(f, a, fa, lm, flm, m, fm, left, tol / 2.0, depth - 1)?
            + simpson_step(f, m, fm, rm, frm, b, fb, right, tol / 2.0, depth - 1)?,
    )
}

/// All design metrics of one QRNG design point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignMetrics {
    /// x = μ·T·d.
    pub load: f64,
    pub shannon_entropy: f64,
    pub min_entropy: f64,
    /// ε-randomness of the symbol distribution (exact L1 definition).
    pub epsilon: f64,
    pub empty_prob: f64,
    pub expected_cycles_per_symbol: f64,
    /// Exact raw-bit rate at the given cycle, bits per unit time.
    pub rate: f64,
    pub cost: f64,
    /// Minimum reference cycle for the configured timing tolerance.
    pub t_min: f64,
}

/// Knobs that enter cost and minimum-cycle calculations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub alpha: f64,
    pub beta: f64,
    pub p_tol: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        // α, β as in the cost heat-map example; 1% misregistration budget.
        CostModel {
            alpha: 0.05,
            beta: 40.0,
            p_tol: 0.01,
        }
    }
}

/// Evaluate every design metric for one parameter point.
pub fn design_metrics(params: &crate::sim::QrngParams, model: &CostModel) -> Result<DesignMetrics> {
    params.validate()?;
    let x = params.load();
    let pmf = crate::models::timebin_pmf(params.bins, x)?;
    Ok(DesignMetrics {
        load: x,
        shannon_entropy: shannon_entropy_closed(x, params.bins)?,
        min_entropy: min_entropy_closed(x, params.bins)?,
        epsilon: epsilon_exact(&pmf),
        empty_prob: empty_cycle_prob(x)?,
        expected_cycles_per_symbol: 1.0 / -math::expm1(-x),
        rate: generation_rate(params.mu, params.cycle, params.efficiency, params.bins, false)?,
        cost: cost(params.mu, params.efficiency, model.alpha, model.beta)?,
        t_min: if params.delta_t > 0.0 {
            min_reference_cycle(params.bins, model.p_tol, params.delta_t)?
        } else {
            0.0
        },
    })
}
