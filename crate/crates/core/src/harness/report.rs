//! CSV and JSON rendering of benchmark results.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

use super::bench::{Aggregate, BenchmarkOutput, CellResult};

pub const CSV_COLUMNS: [&str; 10] = [
    "dataset",
    "decomposition",
    "optimizer",
    "seed",
    "batch_index",
    "final_loss",
    "iterations",
    "wall_time_s",
    "q",
    "stop_reason",
];

/// Stop reason written for cells that failed to run.
pub const ERROR_STOP: &str = "ERROR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Config(format!("unknown report format '{s}'"))),
        }
    }
}

/// Rounds to 6 significant digits.
pub fn sig6(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    format!("{v:.5e}").parse().unwrap_or(v)
}

/// Rounds to 3 decimals.
pub fn dec3(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    format!("{v:.3}").parse().unwrap_or(v)
}

#[derive(Debug, Serialize)]
struct Row<'a> {
    dataset: &'a str,
    decomposition: String,
    optimizer: &'static str,
    seed: u64,
    batch_index: usize,
    final_loss: Option<f64>,
    iterations: Option<usize>,
    wall_time_s: Option<f64>,
    q: Option<f64>,
    stop_reason: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    loss_history: Option<&'a [f64]>,
}

fn row(c: &CellResult, histories: bool) -> Row<'_> {
    let base = Row {
        dataset: &c.dataset,
        decomposition: c.decomposition.to_string(),
        optimizer: c.optimizer.name(),
        seed: c.seed,
        batch_index: c.batch_index,
        final_loss: None,
        iterations: None,
        wall_time_s: None,
        q: None,
        stop_reason: ERROR_STOP,
        error: None,
        loss_history: None,
    };
    match &c.outcome {
        Ok(r) => Row {
            final_loss: Some(sig6(r.final_loss)),
            iterations: Some(r.iterations),
            wall_time_s: Some(dec3(r.wall_time_seconds)),
            q: r.convergence_rate_q.map(sig6),
            stop_reason: r.stop_reason.as_str(),
            loss_history: histories.then_some(r.loss_history.as_slice()),
            ..base
        },
        Err(e) => Row { error: Some(e), ..base },
    }
}

fn na<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn render_csv(out: &BenchmarkOutput) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for c in &out.cells {
        let r = row(c, false);
        w.write_record([
            r.dataset.to_string(),
            r.decomposition,
            r.optimizer.to_string(),
            r.seed.to_string(),
            r.batch_index.to_string(),
            na(r.final_loss),
            na(r.iterations),
            r.wall_time_s.map_or_else(|| "NA".into(), |t| format!("{t:.3}")),
            na(r.q),
            r.stop_reason.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
}

#[derive(Serialize)]
struct AggregateRow<'a> {
    dataset: &'a str,
    decomposition: String,
    optimizer: &'static str,
    runs: usize,
    mean_final_loss: Option<f64>,
    mean_wall_time_s: Option<f64>,
    mean_q: Option<f64>,
}

fn aggregate_row(a: &Aggregate) -> AggregateRow<'_> {
    AggregateRow {
        dataset: &a.dataset,
        decomposition: a.decomposition.to_string(),
        optimizer: a.optimizer.name(),
        runs: a.runs,
        mean_final_loss: a.mean_final_loss.map(sig6),
        mean_wall_time_s: a.mean_wall_time_s.map(dec3),
        mean_q: a.mean_q.map(sig6),
    }
}

/// JSON document `{"runs": [...], "aggregates": [...]}`; per-run loss
/// histories are included when `histories` is set.
pub fn render_json(out: &BenchmarkOutput, histories: bool) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a> {
        runs: Vec<Row<'a>>,
        aggregates: Vec<AggregateRow<'a>>,
    }
    let doc = Doc {
        runs: out.cells.iter().map(|c| row(c, histories)).collect(),
        aggregates: out.aggregates.iter().map(aggregate_row).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn render(out: &BenchmarkOutput, format: ReportFormat, histories: bool) -> Result<String> {
    match format {
        ReportFormat::Csv => render_csv(out),
        ReportFormat::Json => render_json(out, histories),
    }
}

pub fn emit_report(out: &BenchmarkOutput, format: ReportFormat, path: impl AsRef<Path>, histories: bool) -> Result<()> {
    fs::write(path, render(out, format, histories)?)?;
    Ok(())
}
