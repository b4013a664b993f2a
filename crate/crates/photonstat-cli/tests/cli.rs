//! End-to-end tests of the `photonstat` binary: file formats, determinism,
//! sidecar replay and exit codes.

use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_photonstat"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn photonstat")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout JSON")
}

#[test]
fn metrics_reports_frozen_design_point() {
    let out = run(&["metrics", "--mu", "0.4", "--cycle", "1", "--efficiency", "1", "--bins", "256"]);
    assert_ok(&out);
    let v = json_of(&out);
    assert!((v["load"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    // ε of the symbol distribution; the closed form (0.049834) sits 5.5e−5
    // below the exact value at this load, both inside this band.
    assert!((v["epsilon"].as_f64().unwrap() - 0.049834).abs() < 1e-4);
    assert!((v["min_entropy"].as_f64().unwrap() - 7.722193126019103).abs() < 1e-9);
    assert!((v["shannon_entropy"].as_f64().unwrap() - 7.990420489524246).abs() < 1e-9);
    assert!((v["cost"].as_f64().unwrap() - 40.125).abs() < 1e-12);
}

#[test]
fn dataset_generation_and_manifest_classification() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds");
    let out = run(&[
        "generate-dataset",
        "--model",
        "poisson:0.5",
        "--samples",
        "3",
        "--size",
        "2000",
        "--seed",
        "11",
        "--out",
        ds.to_str().unwrap(),
    ]);
    assert_ok(&out);
    for name in ["manifest.json", "config.json", "sample_00000.csv", "sample_00002.csv"] {
        assert!(ds.join(name).exists(), "{name} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ds.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["samples"], 3);
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 3);

    let out = run(&[
        "classify",
        "--manifest",
        ds.join("manifest.json").to_str().unwrap(),
        "--method",
        "variance-interval",
    ]);
    assert_ok(&out);
    let v = json_of(&out);
    assert_eq!(v["files"], 3);
    assert_eq!(v["results"].as_array().unwrap().len(), 3);
}

#[test]
fn smallest_dataset_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("tiny");
    let out = run(&[
        "generate-dataset",
        "--model",
        "geometric:0.5",
        "--samples",
        "1",
        "--size",
        "2",
        "--seed",
        "1",
        "--out",
        ds.to_str().unwrap(),
        "--long",
    ]);
    assert_ok(&out);
    let data = fs::read_to_string(ds.join("dataset.csv")).unwrap();
    assert_eq!(data.lines().count(), 3); // header + 2 values
}

#[test]
fn constant_counts_classify_as_sub_poissonian() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("constant.csv");
    let mut text = String::from("count\n");
    for _ in 0..200 {
        text.push_str("10\n");
    }
    fs::write(&csv, text).unwrap();
    let out = run(&["classify", "--input", csv.to_str().unwrap()]);
    assert_ok(&out);
    let v = json_of(&out);
    assert_eq!(v["final"], "SubPoissonian");
    assert_eq!(v["phase2_ran"], false);
    assert_eq!(v["phase2_pvalue"], serde_json::Value::Null);
    assert!((v["confidence"].as_f64().unwrap() - 0.99).abs() < 1e-12);
}

#[test]
fn simulate_writes_exact_size_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.bits");
    let b = dir.path().join("b.bits");
    for path in [&a, &b] {
        let out = run(&[
            "simulate",
            "--mu",
            "0.05",
            "--bins",
            "256",
            "--seed",
            "21",
            "--bits",
            "80000",
            "--mode",
            "pmf",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_ok(&out);
    }
    let bytes_a = fs::read(&a).unwrap();
    assert_eq!(bytes_a.len(), 10_000); // 8 bits per byte, exactly
    assert_eq!(bytes_a, fs::read(&b).unwrap());

    let stats: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.bits.stats.json")).unwrap())
            .unwrap();
    assert_eq!(stats["seed"], 21);
    assert!(stats["cycles_total"].as_u64().unwrap() >= 10_000);
    assert!(stats["params"]["bins"] == 256);
}

#[test]
fn sidecar_replay_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let outfile = dir.path().join("run.bits");
    let args = [
        "simulate",
        "--mu",
        "0.2",
        "--bins",
        "64",
        "--seed",
        "5",
        "--symbols",
        "5000",
        "--mode",
        "event",
        "--out",
        outfile.to_str().unwrap(),
    ];
    assert_ok(&run(&args));
    let first = fs::read(&outfile).unwrap();
    fs::remove_file(&outfile).unwrap();

    let config = dir.path().join("run.bits.config.json");
    let out = run(&["--config", config.to_str().unwrap()]);
    assert_ok(&out);
    assert_eq!(first, fs::read(&outfile).unwrap());
}

#[test]
fn export_matches_packed_bits() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.bits");
    assert_ok(&run(&[
        "simulate",
        "--mu",
        "0.1",
        "--bins",
        "16",
        "--seed",
        "3",
        "--symbols",
        "250",
        "--mode",
        "free-running",
        "--out",
        raw.to_str().unwrap(),
    ]));
    let ascii = dir.path().join("raw.txt");
    assert_ok(&run(&[
        "export",
        "--input",
        raw.to_str().unwrap(),
        "--out",
        ascii.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&ascii).unwrap();
    assert_eq!(text.len(), 250 * 4);
    assert!(text.chars().all(|c| c == '0' || c == '1'));

    // The battery accepts either encoding and sees the same stream.
    let t1 = json_of(&run(&["test", "--input", raw.to_str().unwrap()]));
    let t2 = json_of(&run(&[
        "test",
        "--input",
        ascii.to_str().unwrap(),
        "--format",
        "ascii-bits",
    ]));
    assert_eq!(t1["tests"], t2["tests"]);
    assert_eq!(t1["tests"].as_array().unwrap().len(), 8);
}

#[test]
fn symbol_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("symbols.csv");
    assert_ok(&run(&[
        "simulate",
        "--mu",
        "0.3",
        "--bins",
        "8",
        "--seed",
        "4",
        "--symbols",
        "100",
        "--mode",
        "pmf",
        "--format",
        "csv",
        "--out",
        csv.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("symbol"));
    assert_eq!(lines.clone().count(), 100);
    assert!(lines.all(|l| l.parse::<u32>().unwrap() < 8));
}

#[test]
fn sweep_surface_shape() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    assert_ok(&run(&[
        "sweep",
        "--mu-grid",
        "0.5,1,2",
        "--efficiency-grid",
        "0.1,0.9",
        "--cycle-grid",
        "0.1",
        "--bins",
        "256",
        "--alpha",
        "0.05",
        "--beta",
        "40",
        "--out",
        csv.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&csv).unwrap();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("mu,T_or_x,d,epsilon,h_min,rate,cost"));
    for line in lines {
        rows.push(line.split(',').map(|v| v.parse().unwrap()).collect());
    }
    assert_eq!(rows.len(), 6);
    let cell = |mu: f64, d: f64| {
        rows.iter()
            .find(|r| r[0] == mu && r[2] == d)
            .unwrap_or_else(|| panic!("row mu={mu} d={d}"))
            .clone()
    };
    // Cost surface: decreasing in μ at fixed d, increasing in d at fixed μ.
    assert!(cell(0.5, 0.1)[6] > cell(2.0, 0.1)[6]);
    assert!(cell(0.5, 0.9)[6] > cell(0.5, 0.1)[6]);
    // Randomness degrades (ε grows, H_min falls) as the load rises.
    assert!(cell(2.0, 0.9)[3] > cell(0.5, 0.1)[3]);
    assert!(cell(2.0, 0.9)[4] < cell(0.5, 0.1)[4]);
}

#[test]
fn exit_codes_follow_error_classes() {
    // usage: missing subcommand
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    // usage: conflicting classify inputs
    let out = run(&["classify", "--input", "a.csv", "--manifest", "m.json"]);
    assert_eq!(out.status.code(), Some(1));
    // usage: malformed model spec
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "generate-dataset",
        "--model",
        "nonsense:1",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    // data: missing input file
    let out = run(&["classify", "--input", "/nonexistent/f.csv"]);
    assert_eq!(out.status.code(), Some(2));
    // numeric: invalid physical parameter
    let out = run(&["metrics", "--mu=-1"]);
    assert_eq!(out.status.code(), Some(3));
    // numeric: stream too short for the battery
    let short = dir.path().join("short.bits");
    fs::write(&short, [0u8; 4]).unwrap();
    let out = run(&["test", "--input", short.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}
