//! Command-line argument surface.
//!
//! Every subcommand's arguments derive `Serialize`/`Deserialize` as well:
//! the resolved command is written next to each run's output as a sidecar
//! config, and `photonstat --config <sidecar>` replays it exactly.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "photonstat",
    version,
    about = "Photon-statistics experiments: dataset generation, source classification, \
             arrival-time QRNG simulation, design metrics and randomness tests"
)]
pub struct Cli {
    /// Replay a run from a sidecar config written by a previous invocation.
    #[arg(long, value_name = "FILE", global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Generate photon-count sample files plus a manifest.
    GenerateDataset(GenerateDatasetArgs),
    /// Classify a count sample (or a whole manifest) as sub-/super-Poissonian or Poissonian.
    Classify(ClassifyArgs),
    /// Simulate an arrival-time QRNG and write its raw output.
    Simulate(SimulateArgs),
    /// Print the design metrics of one parameter point.
    Metrics(MetricsArgs),
    /// Evaluate the metric surface over parameter grids into a CSV.
    Sweep(SweepArgs),
    /// Run the built-in randomness battery on a raw bit file.
    Test(TestArgs),
    /// Re-emit a packed bit file as ASCII bits for external test suites.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    MeanInterval,
    VarianceInterval,
    Dispersion,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    /// Externally clocked cycles, photon arrivals drawn event by event.
    Event,
    /// Externally clocked cycles, symbols drawn from the symbol PMF.
    Pmf,
    /// Free-running waiting-time architecture.
    FreeRunning,
    /// Interval-comparison architecture (one bit per wait pair).
    Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    /// Headerless packed binary, MSB-first within bytes.
    Bits,
    /// CSV with a `symbol` column.
    Csv,
    /// ASCII '0'/'1' characters.
    AsciiBits,
    /// JSON (only where a report is the natural output).
    Json,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenerateDatasetArgs {
    /// Count model spec: poisson:M | geometric:P[:START] | normal:MEAN:VAR |
    /// bose:M | alpha:MEAN:ALPHA | regular:WINDOW:INTERVAL
    #[arg(long)]
    pub model: String,
    /// Number of independent samples.
    #[arg(long, default_value_t = 1000)]
    pub samples: u32,
    /// Observations per sample.
    #[arg(long, default_value_t = 100_000)]
    pub size: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory (sample files + manifest.json + config.json).
    #[arg(long)]
    pub out: PathBuf,
    /// Write one long-format CSV (sample,count) instead of per-sample files.
    #[arg(long, default_value_t = false)]
    pub long: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ClassifyArgs {
    /// Count CSV to classify (column `count`).
    #[arg(long, conflicts_with = "manifest")]
    pub input: Option<PathBuf>,
    /// Dataset manifest: classify every file and aggregate success rates.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Significance level (confidence is 1 − ε).
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::MeanInterval)]
    pub method: MethodArg,
    /// Relative tolerance for the direct-comparison method.
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Known Poisson rate for the goodness-of-fit phase (estimated if absent).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Expected photons per unit time (μ).
    #[arg(long)]
    pub mu: f64,
    /// Reference cycle duration (T).
    #[arg(long, default_value_t = 1.0)]
    pub cycle: f64,
    /// Detection efficiency d ∈ (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub efficiency: f64,
    /// Time bins per cycle (power of two).
    #[arg(long, default_value_t = 256)]
    pub bins: u32,
    /// Maximum timing error δ_t (recorded in the sidecar; not injected here).
    #[arg(long, default_value_t = 0.0)]
    pub delta_t: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Number of symbols to generate (symbol-producing modes).
    #[arg(long)]
    pub symbols: Option<u64>,
    /// Number of raw bits to generate (alternative to --symbols).
    #[arg(long)]
    pub bits: Option<u64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Event)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Bits)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MetricsArgs {
    #[arg(long)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub cycle: f64,
    #[arg(long, default_value_t = 1.0)]
    pub efficiency: f64,
    #[arg(long, default_value_t = 256)]
    pub bins: u32,
    /// Maximum timing error δ_t; enables the minimum-cycle metric when > 0.
    #[arg(long, default_value_t = 0.0)]
    pub delta_t: f64,
    /// Cost-model attenuation coefficient α.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Cost-model detector coefficient β.
    #[arg(long, default_value_t = 40.0)]
    pub beta: f64,
    /// Misregistration tolerance for the minimum reference cycle.
    #[arg(long, default_value_t = 0.01)]
    pub p_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Load grid (μTd directly, with T = d = 1); excludes the physical grids.
    #[arg(long, conflicts_with_all = ["mu_grid", "cycle_grid", "efficiency_grid"])]
    pub x_grid: Option<String>,
    /// Grid spec: `a,b,c` | `lo:hi:n` (linear) | `lo:hi:n:log`.
    #[arg(long)]
    pub mu_grid: Option<String>,
    #[arg(long)]
    pub cycle_grid: Option<String>,
    #[arg(long)]
    pub efficiency_grid: Option<String>,
    #[arg(long, default_value_t = 256)]
    pub bins: u32,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 40.0)]
    pub beta: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TestArgs {
    /// Raw bit file to test.
    #[arg(long)]
    pub input: PathBuf,
    /// Input encoding: packed bits or ASCII '0'/'1'.
    #[arg(long, value_enum, default_value_t = FormatArg::Bits)]
    pub format: FormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExportArgs {
    /// Packed bit file to convert.
    #[arg(long)]
    pub input: PathBuf,
    /// ASCII-bit output path.
    #[arg(long)]
    pub out: PathBuf,
}

impl From<MethodArg> for photonstat::Phase1Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::MeanInterval => photonstat::Phase1Method::MeanInterval,
            MethodArg::VarianceInterval => photonstat::Phase1Method::VarInterval,
            MethodArg::Dispersion => photonstat::Phase1Method::Dispersion,
            MethodArg::Direct => photonstat::Phase1Method::Direct,
        }
    }
}
