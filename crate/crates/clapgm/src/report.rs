//! CSV and JSON report writers.
//!
//! CSV columns: `pair_index,solver,attribute,acc,time_ms,outer_iters,converged`.
//! Failed records leave `acc` empty. JSON carries the same records plus an
//! `aggregates` object keyed by `solver/attribute`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::bench::{Aggregate, BenchRecord, BenchReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Usage(format!("unknown format `{other}` (expected csv or json)"))),
        }
    }
}

pub const CSV_HEADER: [&str; 7] = [
    "pair_index",
    "solver",
    "attribute",
    "acc",
    "time_ms",
    "outer_iters",
    "converged",
];

#[derive(Serialize)]
struct CsvRow<'a> {
    pair_index: usize,
    solver: &'a str,
    attribute: &'a str,
    acc: Option<f64>,
    time_ms: f64,
    outer_iters: usize,
    converged: bool,
}

impl<'a> From<&'a BenchRecord> for CsvRow<'a> {
    fn from(r: &'a BenchRecord) -> Self {
        Self {
            pair_index: r.pair_index,
            solver: r.solver.name(),
            attribute: &r.attribute,
            acc: r.acc,
            time_ms: r.time_ms,
            outer_iters: r.outer_iters,
            converged: r.converged,
        }
    }
}

pub fn write_csv<'a, W: Write>(records: impl IntoIterator<Item = &'a BenchRecord>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(CsvRow::from(r))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_aggregates_csv<W: Write>(report: &BenchReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for agg in report.aggregates.values() {
        w.serialize(agg)?;
    }
    if report.aggregates.is_empty() {
        w.write_record([
            "solver",
            "attribute",
            "pairs",
            "failed",
            "mean_acc_pct",
            "mean_time_ms",
            "fps",
            "converged_fraction",
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_json<W: Write>(report: &BenchReport, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    out.write_all(b"\n").map_err(serde_json::Error::io)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn wrap_io(path: &Path, err: Error) -> Error {
    match err {
        Error::Csv(e) if e.is_io_error() => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        Error::Json(e) if e.is_io() => Error::io(path, std::io::Error::other(e)),
        other => other,
    }
}

/// Writes the whole report to one file.
pub fn emit_report(report: &BenchReport, format: ReportFormat, path: &Path) -> Result<()> {
    let file = create(path)?;
    match format {
        ReportFormat::Csv => write_csv(&report.records, file),
        ReportFormat::Json => write_json(report, file),
    }
    .map_err(|e| wrap_io(path, e))
}

/// Writes one CSV per `solver/attribute` combination plus `aggregates.csv`
/// into `dir`. Returns the files written.
pub fn emit_csv_dir(report: &BenchReport, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for agg in report.aggregates.values() {
        let path = dir.join(format!("{}_{}.csv", agg.solver, agg.attribute));
        let records = report
            .records
            .iter()
            .filter(|r| r.solver == agg.solver && r.attribute == agg.attribute);
        write_csv(records, create(&path)?).map_err(|e| wrap_io(&path, e))?;
        written.push(path);
    }
    let path = dir.join("aggregates.csv");
    write_aggregates_csv(report, create(&path)?).map_err(|e| wrap_io(&path, e))?;
    written.push(path);
    Ok(written)
}

pub fn parse_json(text: &str) -> Result<BenchReport> {
    Ok(serde_json::from_str(text)?)
}

/// Mean/fps summary line for terminals.
pub fn summary_line(agg: &Aggregate) -> String {
    format!(
        "{:>4} {:<13} pairs {:>5}  failed {:>3}  acc {:6.2}%  time {:8.3} ms  fps {:9.1}",
        agg.solver.name(),
        agg.attribute,
        agg.pairs,
        agg.failed,
        agg.mean_acc_pct,
        agg.mean_time_ms,
        agg.fps
    )
}
