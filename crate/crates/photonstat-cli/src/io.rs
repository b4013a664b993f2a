//! File formats: count CSVs, packed/ASCII bit streams, JSON sidecars.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use photonstat::BitStream;
use serde::Serialize;

use crate::CliError;

/// Read a count CSV: a `count` header followed by one value per line.
/// A headerless single column of numbers is accepted too.
pub fn read_counts(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::Data)?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.parse::<f64>().is_err()) {
            continue; // header or blank
        }
        let v: f64 = line
            .parse()
            .with_context(|| format!("{}:{}: not a number: {line:?}", path.display(), lineno + 1))
            .map_err(CliError::Data)?;
        values.push(v);
    }
    Ok(values)
}

pub fn write_counts(path: &Path, values: &[f64]) -> Result<(), CliError> {
    let file = fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(CliError::Data)?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "count")?;
        for v in values {
            writeln!(w, "{v}")?;
        }
        w.flush()
    })()
    .with_context(|| format!("writing {}", path.display()))
    .map_err(CliError::Data)
}

pub fn write_symbols_csv(path: &Path, symbols: &[u16]) -> Result<(), CliError> {
    let file = fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(CliError::Data)?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "symbol")?;
        for s in symbols {
            writeln!(w, "{s}")?;
        }
        w.flush()
    })()
    .with_context(|| format!("writing {}", path.display()))
    .map_err(CliError::Data)
}

pub fn write_packed_bits(path: &Path, bits: &BitStream) -> Result<(), CliError> {
    fs::write(path, &bits.bytes)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::Data)
}

pub fn write_ascii_bits(path: &Path, bits: &BitStream) -> Result<(), CliError> {
    let file = fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(CliError::Data)?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        let mut buf = Vec::with_capacity(4096);
        for i in 0..bits.bit_count {
            buf.push(b'0' + bits.bit(i));
            if buf.len() == 4096 {
                w.write_all(&buf)?;
                buf.clear();
            }
        }
        w.write_all(&buf)?;
        w.flush()
    })()
    .with_context(|| format!("writing {}", path.display()))
    .map_err(CliError::Data)
}

pub fn read_packed_bits(path: &Path) -> Result<BitStream, CliError> {
    let bytes = fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::Data)?;
    let bit_count = bytes.len() as u64 * 8;
    Ok(BitStream { bytes, bit_count })
}

pub fn read_ascii_bits(path: &Path) -> Result<BitStream, CliError> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::Data)?;
    let mut bits = BitStream::with_capacity(text.len() as u64);
    for (i, c) in text.chars().enumerate() {
        match c {
            '0' => bits.push_bits(0, 1),
            '1' => bits.push_bits(1, 1),
            c if c.is_whitespace() => {}
            other => {
                return Err(CliError::Data(anyhow::anyhow!(
                    "{}: unexpected character {other:?} at offset {i}",
                    path.display()
                )))
            }
        }
    }
    Ok(bits)
}

/// Serialize `value` as pretty JSON to `out`, or to stdout when `None`.
pub fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(value)
        .context("serializing JSON")
        .map_err(CliError::Data)?;
    match out {
        Some(path) => fs::write(path, json + "\n")
            .with_context(|| format!("writing {}", path.display()))
            .map_err(CliError::Data),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

/// Sidecar path for an output file: `<out>.config.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".config.json");
    out.with_file_name(name)
}
