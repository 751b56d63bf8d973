//! CSV tables for sweep results.

use std::io::Write;
use std::path::{Path, PathBuf};

use csv::{Terminator, WriterBuilder};

use crate::error::{Error, Result};

pub const HEADER: [&str; 7] = [
    "axis_value",
    "scheme",
    "seed",
    "min_sinr_linear",
    "min_sinr_db",
    "iterations",
    "wall_ms",
];

pub const MEAN_HEADER: [&str; 6] = [
    "axis_value",
    "scheme",
    "seeds",
    "mean_min_sinr_linear",
    "mean_min_sinr_db",
    "mean_iterations",
];

pub const FAILURE_HEADER: [&str; 4] = ["axis_value", "scheme", "seed", "error"];

const SIGNIFICANT: usize = 9;

/// Formats `x` with nine significant digits in the shortest of fixed or
/// exponent notation, trailing zeros removed.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    // Round first so the exponent reflects the rounded mantissa.
    let sci = format!("{:.*e}", SIGNIFICANT - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT as i32).contains(&exp) {
        let decimals = (SIGNIFICANT as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// One raw sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub scheme: String,
    pub seed: u64,
    pub min_sinr_linear: f64,
    pub min_sinr_db: f64,
    pub iterations: usize,
    pub wall_ms: f64,
}

/// Seed average at one grid point for one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanRow {
    pub axis_value: f64,
    pub scheme: String,
    pub seeds: usize,
    pub mean_min_sinr_linear: f64,
    pub mean_min_sinr_db: f64,
    pub mean_iterations: f64,
}

/// A grid point, scheme and seed that did not produce a value.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureRow {
    pub axis_value: f64,
    pub scheme: String,
    pub seed: u64,
    pub error: String,
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(out)
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("cannot write {}: {e}", path.display()))
}

pub fn write_rows<W: Write>(out: W, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            format_float(r.axis_value),
            r.scheme.clone(),
            r.seed.to_string(),
            format_float(r.min_sinr_linear),
            format_float(r.min_sinr_db),
            r.iterations.to_string(),
            format_float(r.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_means<W: Write>(out: W, rows: &[MeanRow]) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(MEAN_HEADER)?;
    for r in rows {
        w.write_record([
            format_float(r.axis_value),
            r.scheme.clone(),
            r.seeds.to_string(),
            format_float(r.mean_min_sinr_linear),
            format_float(r.mean_min_sinr_db),
            format_float(r.mean_iterations),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_failures<W: Write>(out: W, rows: &[FailureRow]) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(FAILURE_HEADER)?;
    for r in rows {
        w.write_record([
            format_float(r.axis_value),
            r.scheme.clone(),
            r.seed.to_string(),
            r.error.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `fig.csv` becomes `fig.<suffix>.csv`.
pub fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn write_file(path: &Path, f: impl FnOnce(std::fs::File) -> csv::Result<()>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
    f(file).map_err(|e| io_error(path, e))
}

/// Writes the raw table to `path`, the seed means next to it as
/// `<stem>.mean.csv`, and `<stem>.failures.csv` when anything failed.
/// Missing directories are created. Returns the paths written.
pub fn write_tables(
    path: &Path,
    rows: &[SweepRow],
    means: &[MeanRow],
    failures: &[FailureRow],
) -> Result<Vec<PathBuf>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    let mut written = vec![path.to_path_buf()];
    write_file(path, |f| write_rows(f, rows))?;
    let mean_path = sibling_path(path, "mean");
    write_file(&mean_path, |f| write_means(f, means))?;
    written.push(mean_path);
    let failure_path = sibling_path(path, "failures");
    if failures.is_empty() {
        if failure_path.exists() {
            std::fs::remove_file(&failure_path).map_err(|e| io_error(&failure_path, e))?;
        }
    } else {
        write_file(&failure_path, |f| write_failures(f, failures))?;
        written.push(failure_path);
    }
    Ok(written)
}
