//! Two-phase classification of a photon-count sample.
//!
//! Phase I screens the sample for a significant gap between mean and
//! variance (four selectable methods); when mean and variance are
//! statistically indistinguishable, Phase II runs a χ² goodness-of-fit test
//! against the Poisson family to separate coherent light from
//! non-Poissonian sources that happen to have equal moments.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math;
use crate::models::PhotonModel;
use crate::rng::derive_seed;
use crate::stats::{chisq_cdf, chisq_quantile, normal_quantile, summarize, SampleSummary};
use crate::{Error, Result};

/// Phase-I outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    SubPoissonian,
    SuperPoissonian,
    MeanVarClose,
    Inconclusive,
}

/// Phase-I method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase1Method {
    /// Compare s² against a confidence interval for the mean.
    MeanInterval,
    /// Compare x̄ against a confidence interval for the variance.
    VarInterval,
    /// Two one-sided hypothesis tests on the dispersion index.
    Dispersion,
    /// Relative-tolerance comparison of x̄ and s².
    Direct,
}

/// Final call of the two-phase flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FinalVerdict {
    SubPoissonian,
    SuperPoissonian,
    Poissonian,
    NonPoissonEqualMoments,
}

/// Full record of one two-phase classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoFoldReport {
    pub phase1_method: Phase1Method,
    pub phase1_verdict: Verdict,
    pub phase2_ran: bool,
    pub phase2_chi2: Option<f64>,
    pub phase2_dof: Option<u64>,
    pub phase2_pvalue: Option<f64>,
    #[serde(rename = "final")]
    pub final_verdict: FinalVerdict,
    pub confidence: f64,
}

/// Default relative tolerance for [`direct_comparison`].
///
/// Calibrated so that i.i.d. Poisson(0.5) samples of size 1e5 come out
/// mean-variance-close about 4.2% of the time: |x̄ − s²|/x̄ < t is
/// |Z| < t·√(n/2) in the large-n limit, and 2Φ(0.0527) − 1 = 0.042 gives
/// t = 0.0527·√(2/n) ≈ 2.36e−4.
pub const DEFAULT_DIRECT_REL_TOL: f64 = 2.36e-4;

/// Phase I, mean-interval variant: the estimated variance is compared with
/// the two-sided confidence interval for the distribution mean, i.e.
/// x̄/s² ≥ 1 + y/(s√n) ⟹ sub-Poissonian, x̄/s² ≤ 1 − y/(s√n) ⟹
/// super-Poissonian, where P(−y < Z < y) = 1 − ε.
pub fn phase1_mean_interval(summary: &SampleSummary, epsilon: f64) -> Result<Verdict> {
    let s2 = summary.var_unbiased;
    if s2 == 0.0 {
        // Zero sample variance with an interval that degenerates to a point:
        // a deterministic source.
        return Ok(Verdict::SubPoissonian);
    }
    let y = normal_quantile(epsilon)?;
    let band = y / (math::sqrt(s2) * math::sqrt(summary.n as f64));
    let ratio = summary.mean / s2;
    Ok(if ratio >= 1.0 + band {
        Verdict::SubPoissonian
    } else if ratio <= 1.0 - band {
        Verdict::SuperPoissonian
    } else {
        Verdict::MeanVarClose
    })
}

/// Phase I, variance-interval variant: the sample mean is compared with the
/// χ² confidence interval for the distribution variance,
/// (nS²/q_hi, nS²/q_lo) with CDF(q_lo) = ε/2 and CDF(q_hi) = 1 − ε/2 at
/// n − 1 degrees of freedom.
pub fn phase1_variance_interval(summary: &SampleSummary, epsilon: f64) -> Result<Verdict> {
    if summary.var_unbiased == 0.0 {
        return Ok(Verdict::SubPoissonian);
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain("epsilon must lie in (0, 1)"));
    }
    let dof = (summary.n - 1) as f64;
    let q_lo = chisq_quantile(epsilon / 2.0, dof)?;
    let q_hi = chisq_quantile(1.0 - epsilon / 2.0, dof)?;
    let n_s2 = summary.n as f64 * summary.var_biased;
    Ok(if summary.mean > n_s2 / q_lo {
        Verdict::SubPoissonian
    } else if summary.mean < n_s2 / q_hi {
        Verdict::SuperPoissonian
    } else {
        Verdict::MeanVarClose
    })
}

/// Phase I, dispersion variant: two consecutive one-sided tests of
/// H₀: m = σ² on the dispersion index χ² = (n−1)s²/x̄, which is χ²_{n−1}
/// under a Poisson null. A significantly small index means the variance
/// sits below the mean (sub-Poissonian); a significantly large one, above.
pub fn phase1_dispersion_tests(summary: &SampleSummary, epsilon: f64) -> Result<Verdict> {
    if summary.mean <= 0.0 {
        return Err(Error::DegenerateSample("degenerate all-zero sample"));
    }
    let dof = (summary.n - 1) as f64;
    let stat = dof * summary.var_unbiased / summary.mean;
    // Sub-test first, then super-test, each one-sided at significance ε.
    if stat <= chisq_quantile(epsilon, dof)? {
        Ok(Verdict::SubPoissonian)
    } else if stat >= chisq_quantile(1.0 - epsilon, dof)? {
        Ok(Verdict::SuperPoissonian)
    } else {
        Ok(Verdict::MeanVarClose)
    }
}

/// Phase I, direct comparison: |x̄ − s²|/x̄ < rel_tol declares the moments
/// close; otherwise the sign of x̄ − s² decides.
pub fn direct_comparison(summary: &SampleSummary, rel_tol: f64) -> Result<Verdict> {
    if summary.mean <= 0.0 {
        return Err(Error::DegenerateSample("mean must be positive"));
    }
    let diff = summary.mean - summary.var_unbiased;
    Ok(if math::abs(diff) / summary.mean < rel_tol {
        Verdict::MeanVarClose
    } else if diff > 0.0 {
        Verdict::SubPoissonian
    } else {
        Verdict::SuperPoissonian
    })
}

/// Outcome of the Phase-II goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofOutcome {
    pub chi2: f64,
    pub dof: u64,
    pub pvalue: f64,
    /// True when the Poisson hypothesis is **not** rejected at level ε.
    pub poisson: bool,
}

/// Phase II: χ² goodness of fit of the observed count frequencies against
/// the Poisson family.
///
/// Observations are keyed by their nearest integer (negative keys fold into
/// the zero bin); bins are merged greedily from the upper tail (and the
/// zero bin upward) until every expected frequency is at least five. The
/// rate is `lambda_known` when given (dof = bins − 1) and the sample mean
/// otherwise (dof = bins − 2).
pub fn phase2_poisson_gof(
    sample: &[f64],
    epsilon: f64,
    lambda_known: Option<f64>,
) -> Result<GofOutcome> {
    if sample.len() < 50 {
        return Err(Error::InsufficientSample {
            needed: 50,
            got: sample.len(),
        });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain("epsilon must lie in (0, 1)"));
    }
    let n = sample.len() as f64;
    let lambda = match lambda_known {
        Some(l) => l,
        None => sample.iter().sum::<f64>() / n,
    };
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::DegenerateSample("rate estimate is not positive"));
    }

    // Histogram over rounded count values.
    let mut kmax = 0usize;
    for &x in sample {
        if !x.is_finite() {
            return Err(Error::NonFinite("sample contains NaN or infinity"));
        }
        let key = math::round(x).max(0.0) as usize;
        if key > 10_000_000 {
            return Err(Error::Domain("count value too large for GoF binning"));
        }
        kmax = kmax.max(key);
    }
    let mut obs = alloc::vec![0.0f64; kmax + 1];
    for &x in sample {
        obs[math::round(x).max(0.0) as usize] += 1.0;
    }

    let pois = PhotonModel::Poisson { mean: lambda };
    let mut exp: Vec<f64> = (0..=kmax as u64)
        .map(|m| n * pois.pmf(m).unwrap())
        .collect();
    let covered: f64 = exp.iter().sum();
    *exp.last_mut().unwrap() += (n - covered).max(0.0);

    // Merge the upper tail until the last expected frequency reaches 5.
    while exp.len() > 1 && *exp.last().unwrap() < 5.0 {
        let e = exp.pop().unwrap();
        let o = obs.pop().unwrap();
        *exp.last_mut().unwrap() += e;
        *obs.last_mut().unwrap() += o;
    }
    // Merge the zero bin upward only if its expectation is too small.
    if exp.len() > 1 && exp[0] < 5.0 {
        exp[1] += exp[0];
        obs[1] += obs[0];
        exp.remove(0);
        obs.remove(0);
    }
    if exp.len() < 3 {
        return Err(Error::TooFewBins);
    }

    let chi2 = chi2_statistic(&obs, &exp);
    let dof = (exp.len() - 1 - usize::from(lambda_known.is_none())) as u64;
    let pvalue = 1.0 - chisq_cdf(chi2, dof as f64)?;
    Ok(GofOutcome {
        chi2,
        dof,
        pvalue,
        poisson: pvalue >= epsilon,
    })
}

#[inline]
pub(crate) fn chi2_statistic(obs: &[f64], exp: &[f64]) -> f64 {
    obs.iter()
        .zip(exp)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum()
}

/// Options for [`two_fold_with`].
#[derive(Debug, Clone, Copy)]
pub struct TwoFoldOptions {
    /// Tolerance for the `Direct` Phase-I method.
    pub rel_tol: f64,
    /// Known Poisson rate for Phase II; estimated from the sample when `None`.
    pub lambda_known: Option<f64>,
}

impl Default for TwoFoldOptions {
    fn default() -> Self {
        TwoFoldOptions {
            rel_tol: DEFAULT_DIRECT_REL_TOL,
            lambda_known: None,
        }
    }
}

/// The two-phase flow with default options.
pub fn two_fold(sample: &[f64], epsilon: f64, method: Phase1Method) -> Result<TwoFoldReport> {
    two_fold_with(sample, epsilon, method, TwoFoldOptions::default())
}

/// Run Phase I; when it reports mean ≈ variance, run the Phase-II
/// goodness-of-fit test to decide Poissonian vs non-Poissonian with equal
/// moments.
pub fn two_fold_with(
    sample: &[f64],
    epsilon: f64,
    method: Phase1Method,
    options: TwoFoldOptions,
) -> Result<TwoFoldReport> {
    let summary = summarize(sample)?;
    let phase1_verdict = match method {
        Phase1Method::MeanInterval => phase1_mean_interval(&summary, epsilon)?,
        Phase1Method::VarInterval => phase1_variance_interval(&summary, epsilon)?,
        Phase1Method::Dispersion => phase1_dispersion_tests(&summary, epsilon)?,
        Phase1Method::Direct => direct_comparison(&summary, options.rel_tol)?,
    };
    let mut report = TwoFoldReport {
        phase1_method: method,
        phase1_verdict,
        phase2_ran: false,
        phase2_chi2: None,
        phase2_dof: None,
        phase2_pvalue: None,
        final_verdict: match phase1_verdict {
            Verdict::SuperPoissonian => FinalVerdict::SuperPoissonian,
            _ => FinalVerdict::SubPoissonian,
        },
        confidence: 1.0 - epsilon,
    };
    if phase1_verdict == Verdict::MeanVarClose {
        let gof = phase2_poisson_gof(sample, epsilon, options.lambda_known)?;
        report.phase2_ran = true;
        report.phase2_chi2 = Some(gof.chi2);
        report.phase2_dof = Some(gof.dof);
        report.phase2_pvalue = Some(gof.pvalue);
        report.final_verdict = if gof.poisson {
            FinalVerdict::Poissonian
        } else {
            FinalVerdict::NonPoissonEqualMoments
        };
    }
    Ok(report)
}

/// Aggregate Phase-I / Phase-II success rates over repeated samples of a
/// model, with per-sample seeds derived from `master_seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessRates {
    pub samples: u32,
    /// Samples where Phase I reported mean ≈ variance.
    pub phase1_close: u32,
    /// Of those, samples where Phase II called Poisson/non-Poisson correctly.
    pub phase2_correct: u32,
    pub phase1_rate: f64,
    pub phase2_rate: f64,
}

/// Phase-I close rate and Phase-II conditional success rate over
/// `n_samples` independent samples of `sample_size` drawn from `model`.
pub fn classification_success_rates(
    model: &PhotonModel,
    n_samples: u32,
    sample_size: usize,
    epsilon: f64,
    method: Phase1Method,
    master_seed: u64,
) -> Result<SuccessRates> {
    let mut close = 0u32;
    let mut correct = 0u32;
    let truth_is_poisson = model.is_poisson();
    for i in 0..n_samples {
        let sample = model.sample(sample_size, derive_seed(master_seed, i as u64))?;
        let report = two_fold(&sample, epsilon, method)?;
        if report.phase1_verdict == Verdict::MeanVarClose {
            close += 1;
            let called_poisson = report.final_verdict == FinalVerdict::Poissonian;
            if called_poisson == truth_is_poisson {
                correct += 1;
            }
        }
    }
    Ok(SuccessRates {
        samples: n_samples,
        phase1_close: close,
        phase2_correct: correct,
        phase1_rate: close as f64 / n_samples as f64,
        phase2_rate: if close > 0 {
            correct as f64 / close as f64
        } else {
            0.0
        },
    })
}
