//! Photon-count distribution models and the time-bin first-detection PMF.
//!
//! Samplers are deterministic in `(model, size, seed)`. All inverse-CDF
//! transforms are written out explicitly so streams are reproducible across
//! platforms; see [`crate::rng`].

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math;
use crate::rng::Rng;
use crate::stats::{ln_gamma, norm_cdf, ndtri};
use crate::{Error, Result};

/// A photon-count distribution model.
///
/// `Normal` is a continuous model: its samples are real-valued (what a
/// mean-variance classification sees is then exactly the nominal `mean` /
/// `var`), while [`PhotonModel::pmf`] exposes the integer-count view obtained
/// by rounding to the nearest count and clamping below zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum PhotonModel {
    /// Coherent-source counts in a window: Poisson with the given mean.
    Poisson { mean: f64 },
    /// Geometric on `start, start+1, …` with success probability `p`.
    Geometric { p: f64, start: u32 },
    /// Thermal light: Bose–Einstein with the given mean.
    BoseEinstein { mean: f64 },
    /// Gaussian with given mean and variance (continuous; see type docs).
    Normal { mean: f64, var: f64 },
    /// Perfectly regular emitter: always `floor(window / interval)` counts.
    Regular { window: f64, interval: f64 },
    /// Sub-Poissonian family: `Y/alpha` with `Y ~ Poisson(alpha * mean)`;
    /// mean `mean`, variance `mean / alpha`.
    AlphaPoisson { mean: f64, alpha: f64 },
}

impl PhotonModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PhotonModel::Poisson { mean } => mean > 0.0 && mean.is_finite(),
            PhotonModel::Geometric { p, .. } => p > 0.0 && p <= 1.0,
            PhotonModel::BoseEinstein { mean } => mean > 0.0 && mean.is_finite(),
            PhotonModel::Normal { mean, var } => mean.is_finite() && var > 0.0 && var.is_finite(),
            PhotonModel::Regular { window, interval } => {
                window > 0.0 && interval > 0.0 && window.is_finite() && interval.is_finite()
            }
            PhotonModel::AlphaPoisson { mean, alpha } => {
                mean > 0.0 && alpha > 0.0 && mean.is_finite() && alpha.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("invalid model parameters"))
        }
    }

    /// True when the underlying count distribution is Poisson.
    pub fn is_poisson(&self) -> bool {
        matches!(self, PhotonModel::Poisson { .. })
    }

    /// Probability of observing the integer count `n`.
    pub fn pmf(&self, n: u64) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            PhotonModel::Poisson { mean } => poisson_pmf(mean, n),
            PhotonModel::Geometric { p, start } => {
                if n < start as u64 {
                    0.0
                } else {
                    math::powi(1.0 - p, n - start as u64) * p
                }
            }
            PhotonModel::BoseEinstein { mean } => {
                let q = mean / (mean + 1.0);
                math::exp(n as f64 * math::ln(q)) / (mean + 1.0)
            }
            PhotonModel::Normal { mean, var } => {
                let sd = math::sqrt(var);
                let hi = norm_cdf((n as f64 + 0.5 - mean) / sd);
                if n == 0 {
                    hi
                } else {
                    hi - norm_cdf((n as f64 - 0.5 - mean) / sd)
                }
            }
            PhotonModel::Regular { window, interval } => {
                if n == math::floor(window / interval) as u64 {
                    1.0
                } else {
                    0.0
                }
            }
            PhotonModel::AlphaPoisson { mean, alpha } => {
                let j = alpha * n as f64;
                let jr = math::round(j);
                if math::abs(j - jr) < 1e-9 {
                    poisson_pmf(alpha * mean, jr as u64)
                } else {
                    0.0
                }
            }
        })
    }

    /// Exact (mean, variance) of the model.
    pub fn moments(&self) -> Result<(f64, f64)> {
        self.validate()?;
        Ok(match *self {
            PhotonModel::Poisson { mean } => (mean, mean),
            PhotonModel::Geometric { p, start } => {
                ((start as f64 - 1.0) + 1.0 / p, (1.0 - p) / (p * p))
            }
            PhotonModel::BoseEinstein { mean } => (mean, mean + mean * mean),
            PhotonModel::Normal { mean, var } => (mean, var),
            PhotonModel::Regular { window, interval } => (math::floor(window / interval), 0.0),
            PhotonModel::AlphaPoisson { mean, alpha } => (mean, mean / alpha),
        })
    }

    /// `j`-th support point as `(value, probability)`.
    ///
    /// Enumeration order is by increasing value; `AlphaPoisson` support lives
    /// on the lattice `j / alpha`, `Normal` on the rounded-count integers.
    pub fn support_point(&self, j: u64) -> Result<(f64, f64)> {
        self.validate()?;
        Ok(match *self {
            PhotonModel::Poisson { .. }
            | PhotonModel::BoseEinstein { .. }
            | PhotonModel::Normal { .. } => (j as f64, self.pmf(j)?),
            PhotonModel::Geometric { p, start } => {
                let k = start as u64 + j;
                (k as f64, math::powi(1.0 - p, j) * p)
            }
            PhotonModel::Regular { window, interval } => {
                let c = math::floor(window / interval);
                if j == 0 {
                    (c, 1.0)
                } else {
                    (c + j as f64, 0.0)
                }
            }
            PhotonModel::AlphaPoisson { mean, alpha } => {
                (j as f64 / alpha, poisson_pmf(alpha * mean, j))
            }
        })
    }

    /// Draw `size` observations; deterministic in `(self, size, seed)`.
    ///
    /// Counts come back as `f64` so the continuous `Normal` model and the
    /// fractional `AlphaPoisson` lattice fit the same return type.
    pub fn sample(&self, size: usize, seed: u64) -> Result<Vec<f64>> {
        self.validate()?;
        let mut rng = Rng::new(seed);
        let mut out = Vec::with_capacity(size);
        match *self {
            PhotonModel::Poisson { mean } => {
                let sampler = PoissonSampler::new(mean);
                for _ in 0..size {
                    out.push(sampler.draw(&mut rng) as f64);
                }
            }
            PhotonModel::Geometric { p, start } => {
                let lnq = math::ln_1p(-p);
                for _ in 0..size {
                    out.push((start as f64 - 1.0) + geometric_from_one(&mut rng, lnq));
                }
            }
            PhotonModel::BoseEinstein { mean } => {
                let lnq = math::ln(mean / (mean + 1.0));
                for _ in 0..size {
                    // floor(ln(1-u)/ln q) inverts the Bose–Einstein CDF.
                    out.push(math::floor(math::ln(rng.uniform_open()) / lnq));
                }
            }
            PhotonModel::Normal { mean, var } => {
                let sd = math::sqrt(var);
                for _ in 0..size {
                    // Midpoint uniform keeps the argument strictly inside (0,1).
                    let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
                    out.push(mean + sd * ndtri(u));
                }
            }
            PhotonModel::Regular { window, interval } => {
                let c = math::floor(window / interval);
                out.resize(size, c);
            }
            PhotonModel::AlphaPoisson { mean, alpha } => {
                let sampler = PoissonSampler::new(alpha * mean);
                for _ in 0..size {
                    out.push(sampler.draw(&mut rng) as f64 / alpha);
                }
            }
        }
        Ok(out)
    }
}

#[inline]
fn poisson_pmf(lambda: f64, n: u64) -> f64 {
    math::exp(n as f64 * math::ln(lambda) - lambda - ln_gamma(n as f64 + 1.0))
}

/// Geometric on {1, 2, …} with ln(1−p) precomputed: `1 + floor(ln u / ln q)`.
#[inline]
fn geometric_from_one(rng: &mut Rng, lnq: f64) -> f64 {
    if lnq == f64::NEG_INFINITY {
        return 1.0; // p = 1
    }
    1.0 + math::floor(math::ln(rng.uniform_open()) / lnq)
}

/// Poisson sampler: sequential inversion below λ = 10, Hörmann's PTRS
/// transformed rejection above. Inversion is what a 1e8-draw dataset run
/// spends its time in, so both paths avoid per-draw allocations.
pub(crate) struct PoissonSampler {
    lambda: f64,
    // inversion
    p0: f64,
    // ptrs
    b: f64,
    a: f64,
    inv_alpha: f64,
    v_r: f64,
    ln_lambda: f64,
}

impl PoissonSampler {
    pub(crate) fn new(lambda: f64) -> Self {
        let b = 0.931 + 2.53 * math::sqrt(lambda);
        let a = -0.059 + 0.02483 * b;
        PoissonSampler {
            lambda,
            p0: math::exp(-lambda),
            b,
            a,
            inv_alpha: 1.1239 + 1.1328 / (b - 3.4),
            v_r: 0.9277 - 3.6224 / (b - 2.0),
            ln_lambda: math::ln(lambda),
        }
    }

    #[inline]
    pub(crate) fn draw(&self, rng: &mut Rng) -> u64 {
        if self.lambda < 10.0 {
            self.draw_inversion(rng)
        } else {
            self.draw_ptrs(rng)
        }
    }

    #[inline]
    fn draw_inversion(&self, rng: &mut Rng) -> u64 {
        let mut u = rng.uniform();
        let mut p = self.p0;
        let mut k = 0u64;
        // Cumulative search; bound is ~40σ above the mean for λ < 10.
        while u > p && k < 500 {
            u -= p;
            k += 1;
            p *= self.lambda / k as f64;
        }
        k
    }

    #[inline]
    fn draw_ptrs(&self, rng: &mut Rng) -> u64 {
        loop {
            let u = rng.uniform() - 0.5;
            let v = rng.uniform();
            let us = 0.5 - math::abs(u);
            let k = math::floor((2.0 * self.a / us + self.b) * u + self.lambda + 0.43);
            if us >= 0.07 && v <= self.v_r {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            if math::ln(v) + math::ln(self.inv_alpha) - math::ln(self.a / (us * us) + self.b)
                <= k * self.ln_lambda - self.lambda - ln_gamma(k + 1.0)
            {
                return k as u64;
            }
        }
    }
}

/// Symbol distribution of the first detected photon across `n_bins` time
/// bins per reference cycle, conditioned on the cycle being non-empty.
///
/// `probs[i - 1] = f(i) = (e^{x/N} − 1)/(1 − e^{−x}) · e^{−i·x/N}` where
/// `x = load`. f is strictly decreasing and sums to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeBinPmf {
    pub n_bins: u32,
    /// x = μ·T·d, expected detected photons per cycle.
    pub load: f64,
    pub probs: Vec<f64>,
}

impl TimeBinPmf {
    /// f(i) for the 1-based bin index.
    #[inline]
    pub fn prob(&self, i: u32) -> f64 {
        self.probs[(i - 1) as usize]
    }
}

/// Build the time-bin PMF for a positive load.
///
/// For vanishing load the PMF tends to uniform; that ideal case is exactly
/// [`uniform_limit`], and `load <= 0` is rejected here.
pub fn timebin_pmf(n_bins: u32, load: f64) -> Result<TimeBinPmf> {
    if n_bins < 2 {
        return Err(Error::Domain("need at least 2 bins"));
    }
    if !(load > 0.0) || !load.is_finite() {
        return Err(Error::Domain("load must be positive"));
    }
    let n = n_bins as f64;
    let a = load / n;
    // expm1 keeps the leading factor accurate down to load ~ 1e-300.
    let c = math::expm1(a) / -math::expm1(-load);
    let probs = (1..=n_bins)
        .map(|i| c * math::exp(-(i as f64) * a))
        .collect();
    Ok(TimeBinPmf {
        n_bins,
        load,
        probs,
    })
}

/// Ideal (zero-load) limit: uniform over the bins.
pub fn uniform_limit(n_bins: u32) -> TimeBinPmf {
    let p = 1.0 / n_bins as f64;
    TimeBinPmf {
        n_bins,
        load: 0.0,
        probs: alloc::vec![p; n_bins as usize],
    }
}

/// Probability that the first *detected* photon falls in bin `i` (1-based),
/// given `n` photons arrived in the cycle and each is detected independently
/// with efficiency `d`:
///
/// `(1 − (i−1)d/N)^n − (1 − i·d/N)^n`.
///
/// Summing over i and adding the all-missed mass `(1−d)^n` gives one.
pub fn first_photon_prob_given_n(i: u32, n: u64, n_bins: u32, d: f64) -> Result<f64> {
    if i < 1 || i > n_bins {
        return Err(Error::Domain("bin index out of range"));
    }
    if n < 1 {
        return Err(Error::Domain("need at least one photon"));
    }
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::Domain("efficiency must lie in (0, 1]"));
    }
    let nf = n_bins as f64;
    let lo = 1.0 - (i as f64 - 1.0) * d / nf;
    let hi = 1.0 - i as f64 * d / nf;
    Ok(math::powi(lo, n) - math::powi(hi, n))
}

/// Probability that all `n` photons fall inside one given bin: `N^{−n}`,
/// independent of which bin.
pub fn all_in_bin_prob(n: u64, n_bins: u32) -> Result<f64> {
    if n < 1 || n_bins < 1 {
        return Err(Error::Domain("need n >= 1 and at least one bin"));
    }
    Ok(math::powi(1.0 / n_bins as f64, n))
}
