//! CSV, JSON and text renderings of scenario and benchmark results.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use super::scenario::{OptimizeOutcome, ScenarioReport};
use super::PerfError;
use crate::pipeline::ThroughputReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    Csv,
    Json,
    #[default]
    Text,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "text" => Ok(ReportFormat::Text),
            other => Err(format!("unknown report format {other:?} (expected csv, json, text)")),
        }
    }
}

/// One system of a scenario, in the fixed report columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemRow {
    pub system: String,
    pub cycles: u64,
    pub time_us: f64,
    pub area_mm2: f64,
    pub power_mw: f64,
    pub gain: f64,
    pub gain_per_area: f64,
    pub gain_per_power: f64,
}

pub fn system_rows(report: &ScenarioReport) -> Vec<SystemRow> {
    report
        .systems
        .iter()
        .map(|s| SystemRow {
            system: s.name.clone(),
            cycles: s.metrics.total_cycles,
            time_us: s.metrics.running_time_us,
            area_mm2: s.metrics.total_area_mm2,
            power_mw: s.metrics.total_power_mw,
            gain: s.gain.performance_gain,
            gain_per_area: s.gain.gain_per_area_overhead,
            gain_per_power: s.gain.gain_per_power_overhead,
        })
        .collect()
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, PerfError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| PerfError::Scenario(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| PerfError::Scenario(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn systems_text(report: &ScenarioReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario {} ({} blocks, baseline {})",
        report.scenario, report.stream_len, report.baseline
    );
    let _ = writeln!(
        out,
        "{:<16} {:>12} {:>14} {:>10} {:>10} {:>8} {:>13} {:>14}",
        "system", "cycles", "time_us", "area_mm2", "power_mw", "gain", "gain_per_area", "gain_per_power"
    );
    for r in system_rows(report) {
        let _ = writeln!(
            out,
            "{:<16} {:>12} {:>14.2} {:>10.3} {:>10.2} {:>8.3} {:>13.3} {:>14.3}",
            r.system, r.cycles, r.time_us, r.area_mm2, r.power_mw, r.gain, r.gain_per_area, r.gain_per_power
        );
    }
    for s in report.systems.iter().filter(|s| !s.per_core_cycles.is_empty()) {
        let cores: Vec<String> = s.per_core_cycles.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "  {} per-core cycles: {}", s.name, cores.join(" "));
    }
    out
}

pub fn render_scenario(report: &ScenarioReport, format: ReportFormat) -> Result<String, PerfError> {
    match format {
        ReportFormat::Csv => to_csv(&system_rows(report)),
        ReportFormat::Json => Ok(to_json(&system_rows(report))),
        ReportFormat::Text => Ok(systems_text(report)),
    }
}

pub fn render_optimize(outcome: &OptimizeOutcome, format: ReportFormat) -> Result<String, PerfError> {
    match format {
        ReportFormat::Csv => to_csv(&system_rows(&outcome.report)),
        ReportFormat::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                system: &'a str,
                objective: String,
                passes: usize,
                before: Vec<String>,
                after: Vec<String>,
                systems: Vec<SystemRow>,
            }
            Ok(to_json(&Out {
                system: &outcome.system,
                objective: outcome.objective.to_string(),
                passes: outcome.passes,
                before: outcome.before.iter().map(ToString::to_string).collect(),
                after: outcome.after.iter().map(ToString::to_string).collect(),
                systems: system_rows(&outcome.report),
            }))
        }
        ReportFormat::Text => {
            let mut out = format!(
                "optimized {} for {} in {} passes\n",
                outcome.system, outcome.objective, outcome.passes
            );
            for (i, (b, a)) in outcome.before.iter().zip(&outcome.after).enumerate() {
                let _ = writeln!(out, "  core {}: {b} -> {a}", i + 1);
            }
            out.push_str(&systems_text(&outcome.report));
            Ok(out)
        }
    }
}

/// One benchmark measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub stages: usize,
    pub stream_len: usize,
    pub repetitions: usize,
    pub blocks_per_sec: f64,
    pub mono_blocks_per_sec: f64,
    /// Pipeline throughput over the one-stage pipeline at the same length.
    pub speedup_vs_n1: f64,
    pub speedup_vs_mono: f64,
    pub busy_pct: Vec<f64>,
    pub blocked_pct: Vec<f64>,
}

impl BenchRow {
    pub fn new(r: &ThroughputReport, one_stage_blocks_per_sec: f64) -> Self {
        let pct = |f: f64| (f * 1000.0).round() / 10.0;
        BenchRow {
            stages: r.stages,
            stream_len: r.stream_len,
            repetitions: r.repetitions,
            blocks_per_sec: r.pipeline_blocks_per_sec,
            mono_blocks_per_sec: r.monolithic_blocks_per_sec,
            speedup_vs_n1: if r.stages == 1 || one_stage_blocks_per_sec <= 0.0 {
                1.0
            } else {
                r.pipeline_blocks_per_sec / one_stage_blocks_per_sec
            },
            speedup_vs_mono: r.speedup,
            busy_pct: r.last_stats.stages.iter().map(|s| pct(s.busy_fraction())).collect(),
            blocked_pct: r.last_stats.stages.iter().map(|s| pct(s.blocked_fraction())).collect(),
        }
    }
}

#[derive(Serialize)]
struct FlatBenchRow {
    stages: usize,
    stream_len: usize,
    repetitions: usize,
    blocks_per_sec: f64,
    mono_blocks_per_sec: f64,
    speedup_vs_n1: f64,
    speedup_vs_mono: f64,
    busy_pct: String,
    blocked_pct: String,
}

fn joined(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.1}")).collect::<Vec<_>>().join(";")
}

pub fn render_bench(rows: &[BenchRow], format: ReportFormat) -> Result<String, PerfError> {
    match format {
        ReportFormat::Csv => to_csv(
            &rows
                .iter()
                .map(|r| FlatBenchRow {
                    stages: r.stages,
                    stream_len: r.stream_len,
                    repetitions: r.repetitions,
                    blocks_per_sec: r.blocks_per_sec,
                    mono_blocks_per_sec: r.mono_blocks_per_sec,
                    speedup_vs_n1: r.speedup_vs_n1,
                    speedup_vs_mono: r.speedup_vs_mono,
                    busy_pct: joined(&r.busy_pct),
                    blocked_pct: joined(&r.blocked_pct),
                })
                .collect::<Vec<_>>(),
        ),
        ReportFormat::Json => Ok(to_json(rows)),
        ReportFormat::Text => {
            let mut out = format!(
                "{:>6} {:>10} {:>14} {:>14} {:>9} {:>9}  {}\n",
                "stages", "blocks", "blocks/s", "mono blocks/s", "vs n=1", "vs mono", "busy% / blocked% per stage"
            );
            for r in rows {
                let _ = writeln!(
                    out,
                    "{:>6} {:>10} {:>14.0} {:>14.0} {:>9.3} {:>9.3}  {} / {}",
                    r.stages,
                    r.stream_len,
                    r.blocks_per_sec,
                    r.mono_blocks_per_sec,
                    r.speedup_vs_n1,
                    r.speedup_vs_mono,
                    joined(&r.busy_pct),
                    joined(&r.blocked_pct)
                );
            }
            Ok(out)
        }
    }
}
