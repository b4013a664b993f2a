//! Subcommand implementations.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use photonstat::metrics::{design_metrics, epsilon_exact, min_entropy_closed, CostModel};
use photonstat::models::{timebin_pmf, PhotonModel};
use photonstat::quantumness::{two_fold_with, FinalVerdict, TwoFoldOptions, Verdict};
use photonstat::randomness::{run_battery, EntThresholds};
use photonstat::rng::derive_seed;
use photonstat::sim::{
    simulate_external_reference, simulate_free_running, simulate_interval_comparison,
    symbols_to_bits, SimMode,
};
use photonstat::{BitStream, QrngParams, SymbolStream, TwoFoldReport};

use crate::args::{
    ClassifyArgs, Command, ExportArgs, FormatArg, GenerateDatasetArgs, MetricsArgs, ModeArg,
    SimulateArgs, SweepArgs, TestArgs,
};
use crate::io;
use crate::CliError;

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command.clone() {
        Command::GenerateDataset(args) => generate_dataset(&command, args),
        Command::Classify(args) => classify(&command, args),
        Command::Simulate(args) => simulate(&command, args),
        Command::Metrics(args) => metrics(&command, args),
        Command::Sweep(args) => sweep(&command, args),
        Command::Test(args) => test(&command, args),
        Command::Export(args) => export(&command, args),
    }
}

pub fn load_command(path: &Path) -> Result<Command, CliError> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(CliError::Data)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))
        .map_err(CliError::Data)
}

fn write_sidecar(command: &Command, path: &Path) -> Result<(), CliError> {
    io::emit_json(command, Some(path))
}

/// Parse a model spec like `poisson:0.5` or `normal:0.5:0.5`.
pub fn parse_model(spec: &str) -> Result<PhotonModel, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let usage = |msg: String| CliError::Usage(format!("model spec {spec:?}: {msg}"));
    let num = |s: &str| -> Result<f64, CliError> {
        s.parse::<f64>()
            .map_err(|_| usage(format!("expected a number, got {s:?}")))
    };
    let expect = |n: usize| -> Result<(), CliError> {
        if parts.len() == n {
            Ok(())
        } else {
            Err(usage(format!("expected {} parameter(s)", n - 1)))
        }
    };
    let model = match parts[0] {
        "poisson" => {
            expect(2)?;
            PhotonModel::Poisson { mean: num(parts[1])? }
        }
        "geometric" => {
            if parts.len() == 2 {
                PhotonModel::Geometric { p: num(parts[1])?, start: 1 }
            } else {
                expect(3)?;
                let start = parts[2]
                    .parse::<u32>()
                    .map_err(|_| usage("support start must be a non-negative integer".into()))?;
                PhotonModel::Geometric { p: num(parts[1])?, start }
            }
        }
        "normal" => {
            expect(3)?;
            PhotonModel::Normal { mean: num(parts[1])?, var: num(parts[2])? }
        }
        "bose" => {
            expect(2)?;
            PhotonModel::BoseEinstein { mean: num(parts[1])? }
        }
        "alpha" => {
            expect(3)?;
            PhotonModel::AlphaPoisson { mean: num(parts[1])?, alpha: num(parts[2])? }
        }
        "regular" => {
            expect(3)?;
            PhotonModel::Regular { window: num(parts[1])?, interval: num(parts[2])? }
        }
        other => return Err(usage(format!("unknown model {other:?}"))),
    };
    model
        .validate()
        .map_err(|e| usage(format!("invalid parameters ({e})")))?;
    Ok(model)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub model: String,
    pub samples: u32,
    pub size: usize,
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    pub files: Vec<String>,
}

fn generate_dataset(command: &Command, args: GenerateDatasetArgs) -> Result<(), CliError> {
    let model = parse_model(&args.model)?;
    if args.samples < 1 {
        return Err(CliError::Usage("need at least one sample".into()));
    }
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(CliError::Data)?;

    let mut manifest = Manifest {
        model: args.model.clone(),
        samples: args.samples,
        size: args.size,
        master_seed: args.seed,
        seeds: Vec::with_capacity(args.samples as usize),
        files: Vec::new(),
    };

    if args.long {
        let path = args.out.join("dataset.csv");
        let file = fs::File::create(&path)
            .with_context(|| format!("creating {}", path.display()))
            .map_err(CliError::Data)?;
        let mut w = std::io::BufWriter::new(file);
        use std::io::Write;
        let io_err = |e: std::io::Error| {
            CliError::Data(anyhow::Error::new(e).context(format!("writing {}", path.display())))
        };
        writeln!(w, "sample,count").map_err(io_err)?;
        for i in 0..args.samples {
            let seed = derive_seed(args.seed, i as u64);
            manifest.seeds.push(seed);
            let values = model.sample(args.size, seed).map_err(CliError::Numeric)?;
            for v in values {
                writeln!(w, "{i},{v}").map_err(io_err)?;
            }
        }
        w.flush().map_err(io_err)?;
        manifest.files.push("dataset.csv".into());
    } else {
        for i in 0..args.samples {
            let seed = derive_seed(args.seed, i as u64);
            manifest.seeds.push(seed);
            let values = model.sample(args.size, seed).map_err(CliError::Numeric)?;
            let name = format!("sample_{i:05}.csv");
            io::write_counts(&args.out.join(&name), &values)?;
            manifest.files.push(name);
        }
    }

    io::emit_json(&manifest, Some(&args.out.join("manifest.json")))?;
    write_sidecar(command, &args.out.join("config.json"))?;
    eprintln!(
        "wrote {} sample(s) of {} values to {}",
        args.samples,
        args.size,
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct FileOutcome {
    file: String,
    phase1_verdict: Verdict,
    #[serde(rename = "final")]
    final_verdict: FinalVerdict,
    phase2_pvalue: Option<f64>,
}

#[derive(Debug, Serialize)]
struct AggregateReport {
    manifest: String,
    model: String,
    files: usize,
    epsilon: f64,
    method: crate::args::MethodArg,
    phase1_close: usize,
    phase1_rate: f64,
    /// Correct Poisson/non-Poisson calls among Phase-I-close samples.
    phase2_correct: usize,
    phase2_rate: f64,
    results: Vec<FileOutcome>,
}

fn classify(command: &Command, args: ClassifyArgs) -> Result<(), CliError> {
    if !(args.epsilon > 0.0 && args.epsilon < 1.0) {
        return Err(CliError::Numeric(photonstat::Error::Domain(
            "epsilon must lie in (0, 1)",
        )));
    }
    let options = TwoFoldOptions {
        rel_tol: args
            .rel_tol
            .unwrap_or(photonstat::quantumness::DEFAULT_DIRECT_REL_TOL),
        lambda_known: args.lambda,
    };
    let method: photonstat::Phase1Method = args.method.into();

    match (&args.input, &args.manifest) {
        (Some(input), None) => {
            let counts = io::read_counts(input)?;
            if counts.len() < 1000 {
                eprintln!(
                    "warning: {} observations; the interval screens assume large samples (>= 1000)",
                    counts.len()
                );
            }
            let report: TwoFoldReport =
                two_fold_with(&counts, args.epsilon, method, options).map_err(CliError::Numeric)?;
            io::emit_json(&report, args.out.as_deref())?;
            if let Some(out) = &args.out {
                write_sidecar(command, &io::sidecar_path(out))?;
            }
            Ok(())
        }
        (None, Some(manifest_path)) => {
            let text = fs::read_to_string(manifest_path)
                .with_context(|| format!("reading {}", manifest_path.display()))
                .map_err(CliError::Data)?;
            let manifest: Manifest = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", manifest_path.display()))
                .map_err(CliError::Data)?;
            let model = parse_model(&manifest.model)?;
            let dir = manifest_path.parent().unwrap_or(Path::new("."));
            let mut results = Vec::new();
            let mut close = 0usize;
            let mut correct = 0usize;
            for name in &manifest.files {
                let counts = io::read_counts(&dir.join(name))?;
                let report = two_fold_with(&counts, args.epsilon, method, options)
                    .map_err(CliError::Numeric)?;
                if report.phase1_verdict == Verdict::MeanVarClose {
                    close += 1;
                    let called_poisson = report.final_verdict == FinalVerdict::Poissonian;
                    if called_poisson == model.is_poisson() {
                        correct += 1;
                    }
                }
                results.push(FileOutcome {
                    file: name.clone(),
                    phase1_verdict: report.phase1_verdict,
                    final_verdict: report.final_verdict,
                    phase2_pvalue: report.phase2_pvalue,
                });
            }
            let files = manifest.files.len();
            let aggregate = AggregateReport {
                manifest: manifest_path.display().to_string(),
                model: manifest.model,
                files,
                epsilon: args.epsilon,
                method: args.method,
                phase1_close: close,
                phase1_rate: close as f64 / files.max(1) as f64,
                phase2_correct: correct,
                phase2_rate: if close > 0 {
                    correct as f64 / close as f64
                } else {
                    0.0
                },
                results,
            };
            io::emit_json(&aggregate, args.out.as_deref())?;
            if let Some(out) = &args.out {
                write_sidecar(command, &io::sidecar_path(out))?;
            }
            Ok(())
        }
        _ => Err(CliError::Usage(
            "classify needs exactly one of --input or --manifest".into(),
        )),
    }
}

#[derive(Debug, Serialize)]
struct SimStats {
    cycles_total: u64,
    cycles_empty: u64,
    seed: u64,
    params: QrngParams,
}

fn simulate(command: &Command, args: SimulateArgs) -> Result<(), CliError> {
    let params = QrngParams {
        mu: args.mu,
        cycle: args.cycle,
        efficiency: args.efficiency,
        bins: args.bins,
        delta_t: args.delta_t,
        seed: args.seed,
    };
    params.validate().map_err(CliError::Numeric)?;
    let bps = params.bits_per_symbol() as u64;

    let (stream, bits): (Option<SymbolStream>, BitStream) = match args.mode {
        ModeArg::Interval => {
            if args.symbols.is_some() {
                return Err(CliError::Usage(
                    "interval mode emits bits, not symbols; use --bits".into(),
                ));
            }
            let n_bits = args.bits.ok_or_else(|| {
                CliError::Usage("interval mode needs --bits".into())
            })?;
            let bits = simulate_interval_comparison(&params, n_bits as usize)
                .map_err(CliError::Numeric)?;
            (None, bits)
        }
        mode => {
            let n_symbols = match (args.symbols, args.bits) {
                (Some(s), None) => s,
                (None, Some(b)) => b.div_ceil(bps),
                (None, None) => {
                    return Err(CliError::Usage("need --symbols or --bits".into()))
                }
                (Some(_), Some(_)) => {
                    return Err(CliError::Usage(
                        "--symbols and --bits are mutually exclusive".into(),
                    ))
                }
            } as usize;
            let stream = match mode {
                ModeArg::Event => {
                    simulate_external_reference(&params, n_symbols, SimMode::Event)
                }
                ModeArg::Pmf => simulate_external_reference(&params, n_symbols, SimMode::Pmf),
                ModeArg::FreeRunning => simulate_free_running(&params, n_symbols),
                ModeArg::Interval => unreachable!(),
            }
            .map_err(CliError::Numeric)?;
            let bits = symbols_to_bits(&stream, params.bins).map_err(CliError::Numeric)?;
            (Some(stream), bits)
        }
    };

    match args.format {
        FormatArg::Bits => io::write_packed_bits(&args.out, &bits)?,
        FormatArg::AsciiBits => io::write_ascii_bits(&args.out, &bits)?,
        FormatArg::Csv => match &stream {
            Some(s) => io::write_symbols_csv(&args.out, &s.symbols)?,
            None => {
                return Err(CliError::Usage(
                    "interval mode has no symbols; use --format bits or ascii-bits".into(),
                ))
            }
        },
        FormatArg::Json => {
            return Err(CliError::Usage(
                "simulate writes bits, csv or ascii-bits".into(),
            ))
        }
    }

    let stats = SimStats {
        cycles_total: stream.as_ref().map_or(0, |s| s.cycles_total),
        cycles_empty: stream.as_ref().map_or(0, |s| s.cycles_empty),
        seed: args.seed,
        params,
    };
    let mut stats_path = args.out.file_name().unwrap_or_default().to_os_string();
    stats_path.push(".stats.json");
    io::emit_json(&stats, Some(&args.out.with_file_name(stats_path)))?;
    write_sidecar(command, &io::sidecar_path(&args.out))?;
    Ok(())
}

fn metrics(command: &Command, args: MetricsArgs) -> Result<(), CliError> {
    let params = QrngParams {
        mu: args.mu,
        cycle: args.cycle,
        efficiency: args.efficiency,
        bins: args.bins,
        delta_t: args.delta_t,
        seed: 0,
    };
    let model = CostModel {
        alpha: args.alpha,
        beta: args.beta,
        p_tol: args.p_tol,
    };
    let m = design_metrics(&params, &model).map_err(CliError::Numeric)?;
    io::emit_json(&m, args.out.as_deref())?;
    if let Some(out) = &args.out {
        write_sidecar(command, &io::sidecar_path(out))?;
    }
    Ok(())
}

/// Parse `a,b,c`, `lo:hi:n` (linear) or `lo:hi:n:log` into grid points.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let usage = |msg: String| CliError::Usage(format!("grid spec {spec:?}: {msg}"));
    if spec.contains(',') || !spec.contains(':') {
        return spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| usage(format!("bad number {s:?}")))
            })
            .collect();
    }
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() < 3 || parts.len() > 4 {
        return Err(usage("expected lo:hi:n or lo:hi:n:log".into()));
    }
    let lo: f64 = parts[0].parse().map_err(|_| usage("bad lower bound".into()))?;
    let hi: f64 = parts[1].parse().map_err(|_| usage("bad upper bound".into()))?;
    let n: usize = parts[2].parse().map_err(|_| usage("bad point count".into()))?;
    let log = match parts.get(3) {
        None => false,
        Some(&"log") => true,
        Some(other) => return Err(usage(format!("unknown scale {other:?}"))),
    };
    if n < 1 {
        return Err(usage("need at least one point".into()));
    }
    if log && !(lo > 0.0 && hi > 0.0) {
        return Err(usage("log scale needs positive bounds".into()));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let points = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            if log {
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            } else {
                lo + t * (hi - lo)
            }
        })
        .collect();
    Ok(points)
}

fn sweep(command: &Command, args: SweepArgs) -> Result<(), CliError> {
    // (mu, T, d) triples; under --x-grid the load is swept directly with
    // T = d = 1, so mu coincides with x.
    let points: Vec<(f64, f64, f64)> = if let Some(xs) = &args.x_grid {
        parse_grid(xs)?.into_iter().map(|x| (x, 1.0, 1.0)).collect()
    } else {
        let mus = parse_grid(args.mu_grid.as_deref().ok_or_else(|| {
            CliError::Usage("sweep needs --x-grid or --mu-grid".into())
        })?)?;
        let cycles = match &args.cycle_grid {
            Some(s) => parse_grid(s)?,
            None => vec![1.0],
        };
        let ds = match &args.efficiency_grid {
            Some(s) => parse_grid(s)?,
            None => vec![1.0],
        };
        let mut out = Vec::with_capacity(mus.len() * cycles.len() * ds.len());
        for &mu in &mus {
            for &cycle in &cycles {
                for &d in &ds {
                    out.push((mu, cycle, d));
                }
            }
        }
        out
    };

    let file = fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(CliError::Data)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["mu", "T_or_x", "d", "epsilon", "h_min", "rate", "cost"])
        .context("writing CSV header")
        .map_err(CliError::Data)?;
    for (mu, cycle, d) in points {
        let x = mu * cycle * d;
        let pmf = timebin_pmf(args.bins, x).map_err(CliError::Numeric)?;
        let eps = epsilon_exact(&pmf);
        let h_min = min_entropy_closed(x, args.bins).map_err(CliError::Numeric)?;
        let rate = photonstat::metrics::generation_rate(mu, cycle, d, args.bins, false)
            .map_err(CliError::Numeric)?;
        let cost =
            photonstat::metrics::cost(mu, d, args.alpha, args.beta).map_err(CliError::Numeric)?;
        let t_or_x = if args.x_grid.is_some() { x } else { cycle };
        w.write_record([
            format!("{mu}"),
            format!("{t_or_x}"),
            format!("{d}"),
            format!("{eps}"),
            format!("{h_min}"),
            format!("{rate}"),
            format!("{cost}"),
        ])
        .context("writing CSV row")
        .map_err(CliError::Data)?;
    }
    w.flush()
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(CliError::Data)?;
    write_sidecar(command, &io::sidecar_path(&args.out))?;
    Ok(())
}

fn test(command: &Command, args: TestArgs) -> Result<(), CliError> {
    let bits = match args.format {
        FormatArg::Bits => io::read_packed_bits(&args.input)?,
        FormatArg::AsciiBits => io::read_ascii_bits(&args.input)?,
        _ => {
            return Err(CliError::Usage(
                "test reads --format bits or ascii-bits".into(),
            ))
        }
    };
    let report = run_battery(&bits, &EntThresholds::default()).map_err(CliError::Numeric)?;
    io::emit_json(&report, args.out.as_deref())?;
    if let Some(out) = &args.out {
        write_sidecar(command, &io::sidecar_path(out))?;
    }
    Ok(())
}

fn export(command: &Command, args: ExportArgs) -> Result<(), CliError> {
    let bits = io::read_packed_bits(&args.input)?;
    io::write_ascii_bits(&args.out, &bits)?;
    write_sidecar(command, &io::sidecar_path(&args.out))?;
    Ok(())
}
