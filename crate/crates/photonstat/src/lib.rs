//! Photon-counting statistics for arrival-time QRNG evaluation.
//!
//! The crate covers the full pipeline for assessing an optical random number
//! generator from its photon statistics:
//!
//! * [`stats`]: sample moments, normal and χ² distribution functions and
//!   quantiles used everywhere else.
//! * [`models`]: photon-count distribution models (Poisson, geometric,
//!   Bose–Einstein, …) with exact moments and seeded samplers, plus the
//!   time-bin first-detection PMF family.
//! * [`quantumness`]: two-phase classification of a count sample as
//!   sub-/super-Poissonian or consistent with a Poisson (coherent) source.
//! * [`sim`]: event-level simulators of the three arrival-time extraction
//!   architectures, with detection inefficiency, empty-cycle accounting,
//!   timing-error injection and bit packing.
//! * [`metrics`]: closed-form design metrics: Shannon/min entropy of the
//!   time-bin symbol distribution, ε-randomness, generation rate, minimum
//!   reference cycle, cost, and the g²(τ) ↔ count-variance relation.
//! * [`randomness`]: a built-in mini battery (five byte-stream statistics
//!   plus monobit / block-frequency / runs) for raw-output trend checks.
//!
//! The crate is `no_std`-compatible (requires `alloc`); all floating-point
//! transcendentals go through `libm` so results are identical with or
//! without the `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]
// Parameter guards use the negated form (`!(x > 0.0)`) so NaN fails the
// check and is rejected like any other out-of-domain value.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod metrics;
pub mod models;
pub mod quantumness;
pub mod randomness;
pub mod rng;
pub mod sim;
pub mod stats;

mod math;

pub use models::{PhotonModel, TimeBinPmf};
pub use quantumness::{Phase1Method, TwoFoldReport, Verdict};
pub use sim::{BitStream, QrngParams, SymbolStream};
pub use stats::SampleSummary;

/// Errors shared by all modules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Fewer observations than the operation needs.
    InsufficientSample { needed: usize, got: usize },
    /// A numeric argument is outside its mathematical domain.
    Domain(&'static str),
    /// Sample is degenerate (e.g. all zeros where a positive mean is required).
    DegenerateSample(&'static str),
    /// Too few bins remain after merging low-expectation bins.
    TooFewBins,
    /// Bin count must be a power of two for bit packing.
    NotPowerOfTwo,
    /// An iterative routine exceeded its retry bound on degenerate input.
    RetryBoundExceeded(&'static str),
    /// A supplied function produced a non-finite value.
    NonFinite(&'static str),
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::InsufficientSample { needed, got } => {
                write!(f, "insufficient sample: need {needed}, got {got}")
            }
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::DegenerateSample(what) => write!(f, "degenerate sample: {what}"),
            Error::TooFewBins => write!(f, "sample too small for GoF"),
            Error::NotPowerOfTwo => write!(f, "bin count is not a power of two"),
            Error::RetryBoundExceeded(what) => write!(f, "retry bound exceeded: {what}"),
            Error::NonFinite(what) => write!(f, "non-finite value: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
