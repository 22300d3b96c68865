//! File writers. Every table has a header row, rows come in a fixed order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use firesafe_core::sim::Summary;
use firesafe_core::{Controller, RunMetrics};
use serde::Serialize;

#[derive(Serialize)]
struct StepRow {
    step: u64,
    uncovered_count: u32,
    cum_uncertainty: u64,
    #[serde(rename = "mean_trace_P")]
    mean_trace_p: f64,
    active_uavs: u32,
}

#[derive(Serialize)]
struct FireTraceRow {
    fire: u64,
    step: u64,
    trace_p: f64,
}

#[derive(Serialize)]
struct SafetySummaryRow {
    case: u8,
    teams: usize,
    trials: usize,
    mean_drones: f64,
    se_drones: f64,
}

#[derive(Serialize)]
struct CompareSummaryRow {
    case: u8,
    controller: Controller,
    drones: usize,
    trials: usize,
    mean_cum_uncertainty: f64,
    se_cum_uncertainty: f64,
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Like [`write_rows`] but emits the header even for an empty table.
fn write_with_header<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_steps(path: &Path, m: &RunMetrics) -> csv::Result<()> {
    let rows: Vec<StepRow> = (0..m.uncovered.len())
        .map(|k| StepRow {
            step: k as u64 + 1,
            uncovered_count: m.uncovered[k],
            cum_uncertainty: m.cumulative_uncertainty[k],
            mean_trace_p: m.mean_trace_p[k],
            active_uavs: m.active_uavs[k],
        })
        .collect();
    write_with_header(
        path,
        &[
            "step",
            "uncovered_count",
            "cum_uncertainty",
            "mean_trace_P",
            "active_uavs",
        ],
        &rows,
    )
}

pub fn write_safety_records(path: &Path, m: &RunMetrics) -> csv::Result<()> {
    write_with_header(
        path,
        &[
            "step",
            "team",
            "vicinity_fires",
            "recruited",
            "feasible",
            "confidence",
        ],
        &m.safety,
    )
}

pub fn write_fire_traces(path: &Path, m: &RunMetrics) -> csv::Result<()> {
    let rows: Vec<FireTraceRow> = m
        .fire_trace_p
        .iter()
        .flat_map(|(&fire, series)| {
            series.values.iter().enumerate().map(move |(k, &v)| FireTraceRow {
                fire,
                step: series.first_step + k as u64,
                trace_p: v,
            })
        })
        .collect();
    write_with_header(path, &["fire", "step", "trace_p"], &rows)
}

pub fn write_safety_summary(path: &Path, summary: &[(u8, usize, Summary)]) -> csv::Result<()> {
    let rows: Vec<SafetySummaryRow> = summary
        .iter()
        .map(|&(case, teams, s)| SafetySummaryRow {
            case,
            teams,
            trials: s.n,
            mean_drones: s.mean,
            se_drones: s.se,
        })
        .collect();
    write_rows(path, &rows)
}

pub fn write_compare_summary(path: &Path, summary: &[(u8, Controller, usize, Summary)]) -> csv::Result<()> {
    let rows: Vec<CompareSummaryRow> = summary
        .iter()
        .map(|&(case, controller, drones, s)| CompareSummaryRow {
            case,
            controller,
            drones,
            trials: s.n,
            mean_cum_uncertainty: s.mean,
            se_cum_uncertainty: s.se,
        })
        .collect();
    write_rows(path, &rows)
}

pub fn write_json(path: &Path, m: &RunMetrics) -> Result<(), crate::Failure> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, m)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
