//! Report writers and readers: transition logs as line-oriented CSV,
//! replay and benchmark summaries as JSON, plus the plot-friendly bench
//! table. Everything diffs cleanly in CI.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsm::TransitionLog;
use crate::latency::{BenchReport, Method};
use crate::replay::{AccuracyReport, TrialReplay};
use crate::types::{IcfValue, TransitionDecision, TransitionKind};

/// Write one trial's decision log: `t,state_before,kind,feature_value,fired`.
pub fn write_transition_log<W: std::io::Write>(log: &TransitionLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "state_before", "kind", "feature_value", "fired"])?;
    for d in &log.decisions {
        w.write_record([
            d.t.to_string(),
            d.state_before().as_str().to_string(),
            d.kind.as_str().to_string(),
            d.feature.value.to_string(),
            d.fired.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read decisions back from a transition-log CSV.
pub fn read_transition_log(path: &Path) -> Result<Vec<TransitionDecision>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let path_str = path.display().to_string();
        let bad = |msg: String| Error::Data {
            path: path_str.clone(),
            row,
            msg,
        };
        let kind: TransitionKind = record
            .get(2)
            .ok_or_else(|| bad("missing kind".into()))?
            .parse()
            .map_err(|e| bad(format!("{e}")))?;
        let t: f64 = record
            .get(0)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad t".into()))?;
        let value: f64 = record
            .get(3)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad feature_value".into()))?;
        let fired: bool = record
            .get(4)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad fired".into()))?;
        out.push(TransitionDecision {
            kind,
            t,
            feature: IcfValue {
                kind: crate::data::icf_kind_for(kind),
                value,
            },
            fired,
        });
    }
    Ok(out)
}

/// JSON summary of a replay run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplaySummary {
    pub trials: usize,
    pub per_transition: Vec<TransitionRow>,
    pub overall_correct: u64,
    pub overall_total: u64,
    pub overall_accuracy_pct: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionRow {
    pub kind: TransitionKind,
    pub n_correct: u64,
    pub n_total: u64,
    pub accuracy_pct: Option<f64>,
}

impl ReplaySummary {
    pub fn new(replays: &[TrialReplay], total: &AccuracyReport) -> Self {
        let overall = total.overall();
        Self {
            trials: replays.len(),
            per_transition: total
                .rows()
                .map(|(kind, tally)| TransitionRow {
                    kind,
                    n_correct: tally.n_correct,
                    n_total: tally.n_total,
                    accuracy_pct: tally.accuracy_pct(),
                })
                .collect(),
            overall_correct: overall.n_correct,
            overall_total: overall.n_total,
            overall_accuracy_pct: overall.accuracy_pct(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Accuracy table in the style of the offline-evaluation results.
    pub fn to_table(&self) -> String {
        let mut out = String::from("transition  detected/total  accuracy\n");
        for row in &self.per_transition {
            out.push_str(&format!(
                "{:<11} {:>7}/{:<7} {}\n",
                row.kind.label(),
                row.n_correct,
                row.n_total,
                row.accuracy_pct
                    .map(|a| format!("{a:6.2}%"))
                    .unwrap_or_else(|| "  --".into()),
            ));
        }
        out.push_str(&format!(
            "overall     {:>7}/{:<7} {}\n",
            self.overall_correct,
            self.overall_total,
            self.overall_accuracy_pct
                .map(|a| format!("{a:6.2}%"))
                .unwrap_or_else(|| "  --".into()),
        ));
        out
    }
}

/// Plot-friendly benchmark table: one row per target and method, medians
/// and quartiles in seconds, plus the ML/TH ratio on TH rows.
pub fn bench_table_csv(report: &BenchReport) -> String {
    let mut out = String::from("target,method,cycles,median_s,q1_s,q3_s,ml_over_th\n");
    for r in &report.results {
        let ratio = match r.method {
            Method::Th => report
                .speedup(r.target)
                .map(|s| format!("{s:.2}"))
                .unwrap_or_default(),
            Method::Ml => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{:e},{:e},{:e},{}\n",
            r.target.label(),
            r.method.label(),
            r.cycles,
            r.median,
            r.q1,
            r.q3,
            ratio
        ));
    }
    out
}

/// Human-oriented benchmark table.
pub fn bench_table_text(report: &BenchReport) -> String {
    let mut out = String::new();
    if report.clock_warning {
        out.push_str(&format!(
            "warning: clock resolution {:.3e}s is coarser than 1us; medians may quantize\n",
            report.clock_resolution
        ));
    }
    out.push_str("target                  method  median      q1          q3          ML/TH\n");
    for r in &report.results {
        let ratio = match r.method {
            Method::Th => report
                .speedup(r.target)
                .map(|s| format!("{s:6.2}x"))
                .unwrap_or_default(),
            Method::Ml => String::new(),
        };
        out.push_str(&format!(
            "{:<23} {:<7} {:<11} {:<11} {:<11} {}\n",
            r.target.label(),
            r.method.label(),
            format_si(r.median),
            format_si(r.q1),
            format_si(r.q3),
            ratio
        ));
    }
    out
}

fn format_si(seconds: f64) -> String {
    if seconds >= 1e-3 {
        format!("{:.3} ms", seconds * 1e3)
    } else if seconds >= 1e-6 {
        format!("{:.3} us", seconds * 1e6)
    } else {
        format!("{:.1} ns", seconds * 1e9)
    }
}

/// Serialize the full benchmark report (latency lists included).
pub fn bench_report_json(report: &BenchReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Config(e.to_string()))
}

pub fn bench_report_from_json(text: &str) -> Result<BenchReport> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}
