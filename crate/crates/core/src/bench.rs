//! Run metrics, fulfilment GAP, courier pay, calibration sweeps and
//! side-by-side reports.

use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Instance;
use crate::sim::{simulate_day, CommittedRoute, SimConfig, SimError, SimResult};

/// Summary of one simulated day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub instance: String,
    pub orders: usize,
    pub available_couriers: usize,
    /// Couriers with at least one completed route.
    pub couriers_used: usize,
    pub orders_fulfilled: usize,
    pub routing_time_min: f64,
    pub total_compensation: Option<f64>,
}

pub fn compute_metrics(label: &str, result: &SimResult) -> MetricsRow {
    MetricsRow {
        instance: label.to_string(),
        orders: result.orders,
        available_couriers: result.available_couriers,
        couriers_used: result.couriers_used(),
        orders_fulfilled: result.fulfilled(),
        routing_time_min: result.routing_time_s() as f64 / 60.0,
        total_compensation: None,
    }
}

/// Per-order courier pay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pay {
    pub base_per_order: f64,
    pub variable_per_order: f64,
}

impl Default for Pay {
    fn default() -> Self {
        Self {
            base_per_order: 1.0,
            variable_per_order: 0.0,
        }
    }
}

/// Total pay over every order delivered on `routes`.
pub fn compensation(routes: &[CommittedRoute], pay: Pay) -> f64 {
    let delivered: usize = routes.iter().map(|r| r.route.len()).sum();
    delivered as f64 * (pay.base_per_order + pay.variable_per_order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("GAP is undefined when the candidate fulfilled no orders")]
pub struct GapError;

/// `100 * (baseline - candidate) / candidate`, unrounded.
pub fn gap_percent_raw(of_baseline: u64, of_candidate: u64) -> Result<f64, GapError> {
    if of_candidate == 0 {
        return Err(GapError);
    }
    Ok(100.0 * (of_baseline as f64 - of_candidate as f64) / of_candidate as f64)
}

/// GAP cut to two decimals toward zero, computed exactly in hundredths.
pub fn gap_percent(of_baseline: u64, of_candidate: u64) -> Result<f64, GapError> {
    if of_candidate == 0 {
        return Err(GapError);
    }
    let hundredths = 10_000 * (i128::from(of_baseline) - i128::from(of_candidate)) / i128::from(of_candidate);
    Ok(hundredths as f64 / 100.0)
}

pub fn format_gap(gap: f64) -> String {
    let s = format!("{gap:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("line {line}: {detail}")]
    Parse { line: u64, detail: String },
    #[error("instance `{0}` appears in only one of the two runs")]
    Unmatched(String),
    #[error("instance `{instance}`: {source}")]
    Gap { instance: String, source: GapError },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub const REPORT_HEADER: [&str; 6] = [
    "instance",
    "orders",
    "available_couriers",
    "cu",
    "of",
    "routing_time_min",
];

fn min_str(m: f64) -> String {
    format!("{m:.2}")
}

pub fn write_metrics_csv<W: Write>(out: W, rows: &[MetricsRow]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.orders.to_string(),
            r.available_couriers.to_string(),
            r.couriers_used.to_string(),
            r.orders_fulfilled.to_string(),
            min_str(r.routing_time_min),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows with the report columns; a trailing `gap_percent` column is ignored.
pub fn read_metrics_csv<R: Read>(input: R) -> Result<Vec<MetricsRow>, ReportError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header = reader.headers()?.clone();
    let found: Vec<&str> = header.iter().take(REPORT_HEADER.len()).collect();
    if found != REPORT_HEADER {
        return Err(ReportError::Parse {
            line: 1,
            detail: format!("expected columns {}", REPORT_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |col: &str| ReportError::Parse {
            line,
            detail: format!("bad `{col}` value"),
        };
        let count = |i: usize| -> Result<usize, ReportError> {
            record
                .get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad(REPORT_HEADER[i]))
        };
        rows.push(MetricsRow {
            instance: record.get(0).ok_or_else(|| bad("instance"))?.trim().to_string(),
            orders: count(1)?,
            available_couriers: count(2)?,
            couriers_used: count(3)?,
            orders_fulfilled: count(4)?,
            routing_time_min: record
                .get(5)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad("routing_time_min"))?,
            total_compensation: None,
        });
    }
    Ok(rows)
}

/// One instance run by two methods.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: MetricsRow,
    pub candidate: MetricsRow,
    /// Fulfilment GAP of the baseline against the candidate.
    pub gap_percent: f64,
    /// Same formula applied to routing minutes; informational only.
    pub routing_gap_percent: Option<f64>,
}

/// Pairs rows by instance label, in baseline order.
pub fn compare(baseline: &[MetricsRow], candidate: &[MetricsRow]) -> Result<Vec<Comparison>, ReportError> {
    if let Some(c) = candidate
        .iter()
        .find(|c| !baseline.iter().any(|b| b.instance == c.instance))
    {
        return Err(ReportError::Unmatched(c.instance.clone()));
    }
    baseline
        .iter()
        .map(|b| {
            let c = candidate
                .iter()
                .find(|c| c.instance == b.instance)
                .ok_or_else(|| ReportError::Unmatched(b.instance.clone()))?;
            let gap = gap_percent(b.orders_fulfilled as u64, c.orders_fulfilled as u64).map_err(|source| {
                ReportError::Gap {
                    instance: b.instance.clone(),
                    source,
                }
            })?;
            let routing_gap = (c.routing_time_min > 0.0)
                .then(|| 100.0 * (b.routing_time_min - c.routing_time_min) / c.routing_time_min);
            Ok(Comparison {
                baseline: b.clone(),
                candidate: c.clone(),
                gap_percent: gap,
                routing_gap_percent: routing_gap,
            })
        })
        .collect()
}

/// Candidate rows in report columns plus `gap_percent`.
pub fn write_comparison_csv<W: Write>(out: W, rows: &[Comparison]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = REPORT_HEADER.to_vec();
    header.push("gap_percent");
    w.write_record(&header)?;
    for r in rows {
        let c = &r.candidate;
        w.write_record([
            c.instance.clone(),
            c.orders.to_string(),
            c.available_couriers.to_string(),
            c.couriers_used.to_string(),
            c.orders_fulfilled.to_string(),
            min_str(c.routing_time_min),
            format_gap(r.gap_percent),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width side-by-side table: instance, orders, couriers, then CU, O.F.
/// and routing minutes of each run, then GAP.
pub fn comparison_table(rows: &[Comparison], baseline_name: &str, candidate_name: &str) -> String {
    let mut out = String::new();
    let w = [8, 8, 10, 7, 8, 14];
    let _ = writeln!(
        out,
        "{:>w0$} {:>w1$} {:>w2$} | {:^g$} | {:^g$} | {:>8}",
        "",
        "",
        "available",
        baseline_name,
        candidate_name,
        "",
        w0 = w[0],
        w1 = w[1],
        w2 = w[2],
        g = w[3] + w[4] + w[5] + 2
    );
    let _ = writeln!(
        out,
        "{:>w0$} {:>w1$} {:>w2$} | {:>w3$} {:>w4$} {:>w5$} | {:>w3$} {:>w4$} {:>w5$} | {:>8}",
        "instance",
        "orders",
        "couriers",
        "CU",
        "O.F.",
        "routing min",
        "CU",
        "O.F.",
        "routing min",
        "GAP (%)",
        w0 = w[0],
        w1 = w[1],
        w2 = w[2],
        w3 = w[3],
        w4 = w[4],
        w5 = w[5]
    );
    for r in rows {
        let (b, c) = (&r.baseline, &r.candidate);
        let _ = writeln!(
            out,
            "{:>w0$} {:>w1$} {:>w2$} | {:>w3$} {:>w4$} {:>w5$} | {:>w3$} {:>w4$} {:>w5$} | {:>8}",
            b.instance,
            b.orders,
            b.available_couriers,
            b.couriers_used,
            b.orders_fulfilled,
            min_str(b.routing_time_min),
            c.couriers_used,
            c.orders_fulfilled,
            min_str(c.routing_time_min),
            format_gap(r.gap_percent),
            w0 = w[0],
            w1 = w[1],
            w2 = w[2],
            w3 = w[3],
            w4 = w[4],
            w5 = w[5]
        );
    }
    out
}

/// Alpha and iteration grids of a calibration sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGrid {
    pub alphas: Vec<f64>,
    pub iterations: Vec<u32>,
}

impl Default for CalibrationGrid {
    /// Alpha 0.0 to 1.0 in steps of 0.1; 500 to 2000 iterations in steps of 500.
    fn default() -> Self {
        Self {
            alphas: (0..=10).map(|i| f64::from(i) / 10.0).collect(),
            iterations: vec![500, 1000, 1500, 2000],
        }
    }
}

/// One simulated day inside a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRun {
    pub alpha: f64,
    pub iterations: u32,
    pub replication: u32,
    pub of: usize,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCell {
    pub alpha: f64,
    pub iterations: u32,
    pub replications: u32,
    pub mean_of: f64,
    pub mean_runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Calibration {
    /// Grid order: alphas outer, iteration counts inner, replications innermost.
    pub runs: Vec<CalibrationRun>,
    pub cells: Vec<CalibrationCell>,
}

impl Calibration {
    pub fn cell(&self, alpha: f64, iterations: u32) -> Option<&CalibrationCell> {
        self.cells
            .iter()
            .find(|c| (c.alpha - alpha).abs() < 1e-9 && c.iterations == iterations)
    }

    pub fn best_mean_of(&self) -> f64 {
        self.cells.iter().map(|c| c.mean_of).fold(0.0, f64::max)
    }
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("calibration grids and replication count must be non-empty")]
    EmptyGrid,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Simulates the day once per grid cell and replication. Replication `r`
/// uses solver seed `seed + r` in every cell, so cells differ only in
/// alpha and iteration count.
pub fn calibrate(
    instance: &Instance,
    grid: &CalibrationGrid,
    replications: u32,
    seed: u64,
    base: &SimConfig,
) -> Result<Calibration, CalibrationError> {
    if grid.alphas.is_empty() || grid.iterations.is_empty() || replications == 0 {
        return Err(CalibrationError::EmptyGrid);
    }
    let mut out = Calibration::default();
    for &alpha in &grid.alphas {
        for &iterations in &grid.iterations {
            let mut total_of = 0usize;
            let mut total_s = 0.0;
            for r in 0..replications {
                let mut config = base.clone();
                config.solver.alpha = alpha;
                config.solver.iterations = iterations;
                config.solver.seed = seed.wrapping_add(u64::from(r));
                let started = Instant::now();
                let result = simulate_day(instance, &config)?;
                let runtime_s = started.elapsed().as_secs_f64();
                total_of += result.fulfilled();
                total_s += runtime_s;
                out.runs.push(CalibrationRun {
                    alpha,
                    iterations,
                    replication: r,
                    of: result.fulfilled(),
                    runtime_s,
                });
            }
            out.cells.push(CalibrationCell {
                alpha,
                iterations,
                replications,
                mean_of: total_of as f64 / f64::from(replications),
                mean_runtime_s: total_s / f64::from(replications),
            });
        }
    }
    Ok(out)
}

fn fmt_alpha(a: f64) -> String {
    if a.fract() == 0.0 {
        format!("{a:.1}")
    } else {
        a.to_string()
    }
}

/// `alpha,iterations,replication,of,runtime_s`, one row per run.
pub fn write_calibration_csv<W: Write>(out: W, calibration: &Calibration) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "iterations", "replication", "of", "runtime_s"])?;
    for r in &calibration.runs {
        w.write_record([
            fmt_alpha(r.alpha),
            r.iterations.to_string(),
            r.replication.to_string(),
            r.of.to_string(),
            format!("{:.3}", r.runtime_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Surface data: `alpha,iterations,replications,mean_of,mean_runtime_s`.
pub fn write_calibration_cells_csv<W: Write>(out: W, calibration: &Calibration) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "iterations", "replications", "mean_of", "mean_runtime_s"])?;
    for c in &calibration.cells {
        w.write_record([
            fmt_alpha(c.alpha),
            c.iterations.to_string(),
            c.replications.to_string(),
            format!("{:.3}", c.mean_of),
            format!("{:.3}", c.mean_runtime_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}
