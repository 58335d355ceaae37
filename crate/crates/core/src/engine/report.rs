//! CSV and JSON writers. Floats use Rust's shortest round-trip formatting,
//! so identical metrics always produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{Metrics, RunTrace, SweepFits};
use crate::error::{Error, Result};
use crate::model::Network;

pub const CSV_HEADER: &str = "V,seed,policy,utility,backlog,energy_avg,drops,violations";

/// The per-run fields shared by the CSV and JSON outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    #[serde(rename = "V")]
    pub v: f64,
    pub seed: u64,
    pub policy: &'static str,
    pub utility: f64,
    pub backlog: f64,
    pub energy_avg: f64,
    pub drops: f64,
    pub violations: u64,
}

impl From<&Metrics> for ReportRow {
    fn from(m: &Metrics) -> Self {
        Self {
            v: m.v,
            seed: m.seed,
            policy: m.policy.name(),
            utility: m.utility,
            backlog: m.backlog_avg,
            energy_avg: m.energy_avg,
            drops: m.dropped_total,
            violations: m.violations,
        }
    }
}

pub fn metrics_csv(rows: &[Metrics]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for m in rows {
        let r = ReportRow::from(m);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.v, r.seed, r.policy, r.utility, r.backlog, r.energy_avg, r.drops, r.violations
        );
    }
    s
}

#[derive(Serialize)]
struct JsonReport<'a> {
    rows: Vec<ReportRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fits: Option<&'a SweepFits>,
    details: &'a [Metrics],
}

/// JSON report: the CSV fields per run, the sweep fits when present, and the
/// full metrics under `details`.
pub fn metrics_json(rows: &[Metrics], fits: Option<&SweepFits>) -> Result<String> {
    let report = JsonReport {
        rows: rows.iter().map(ReportRow::from).collect(),
        fits,
        details: rows,
    };
    serde_json::to_string_pretty(&report).map_err(|e| Error::Serialize(e.to_string()))
}

/// Trace CSV: one row per recorded slot with every queue as a column.
pub fn trace_csv(net: &Network, trace: &RunTrace) -> String {
    let k = net.class_count();
    let dests = net.destinations();
    let mut s = String::from("t,backlog");
    let mut data_cols = Vec::new();
    for n in 0..net.node_count() {
        for (c, &d) in dests.iter().enumerate() {
            if n != d {
                data_cols.push(n * k + c);
                let _ = write!(s, ",q_n{}_d{}", n + 1, d + 1);
            }
        }
    }
    for n in 0..net.node_count() {
        let _ = write!(s, ",e_n{}", n + 1);
    }
    let two_phase = trace.records.first().is_some_and(|r| r.virtual_q.is_some());
    if two_phase {
        s.push_str(",virtual_backlog");
        for n in 0..net.node_count() {
            let _ = write!(s, ",ve_n{}", n + 1);
        }
    }
    s.push('\n');
    for r in &trace.records {
        let _ = write!(s, "{},{}", r.t, r.q.iter().sum::<f64>());
        for &i in &data_cols {
            let _ = write!(s, ",{}", r.q[i]);
        }
        for x in &r.e {
            let _ = write!(s, ",{x}");
        }
        if let (Some(vq), Some(ve)) = (&r.virtual_q, &r.virtual_e) {
            let _ = write!(s, ",{}", vq.iter().sum::<f64>());
            for x in ve {
                let _ = write!(s, ",{x}");
            }
        }
        s.push('\n');
    }
    s
}

/// Writes `contents` to `path`, choosing JSON for a `.json` extension and
/// the given CSV otherwise.
pub fn write_metrics(path: &Path, rows: &[Metrics], fits: Option<&SweepFits>) -> Result<()> {
    let text = if path.extension().is_some_and(|e| e == "json") {
        metrics_json(rows, fits)?
    } else {
        metrics_csv(rows)
    };
    std::fs::write(path, text)?;
    Ok(())
}
