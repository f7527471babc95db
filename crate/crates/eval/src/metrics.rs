//! Per-run metrics rows, incremental CSV output and summaries.

use serde::{Deserialize, Serialize};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use wbc_core::trace::TraceRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: String,
    pub task: u32,
    /// Planning plus execution, s.
    pub total_time: f64,
    pub base_distance: f64,
    pub joint_distance: f64,
    pub planning_time: f64,
    pub execution_time: f64,
    pub success: bool,
    pub seed: u64,
}

/// Appends rows to a CSV file, flushing after each one so a crashed sweep
/// keeps everything written so far.
pub struct RowSink {
    w: csv::Writer<File>,
}

impl RowSink {
    /// Writes the header only when the file is new or empty.
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        Ok(Self { w })
    }

    pub fn append(&mut self, row: &MetricsRow) -> std::io::Result<()> {
        self.w.serialize(row).map_err(std::io::Error::other)?;
        self.w.flush()
    }
}

pub fn read_rows(path: &Path) -> Result<Vec<MetricsRow>, csv::Error> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation; one value has std 0.
pub fn mean_std(values: &[f64]) -> Option<Stat> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some(Stat { mean, std })
}

/// One method on one task. Success rate counts every run; the time and
/// distance statistics cover successful runs only and are absent when there
/// were none.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub task: u32,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub total_time: Option<Stat>,
    pub base_distance: Option<Stat>,
    pub joint_distance: Option<Stat>,
    pub planning_time: Option<Stat>,
    pub execution_time: Option<Stat>,
}

/// Groups by `(method, task)` in order of first appearance.
pub fn summarize(rows: &[MetricsRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, u32)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(m, t)| *m == r.method && *t == r.task) {
            keys.push((r.method.clone(), r.task));
        }
    }
    keys.into_iter()
        .map(|(method, task)| {
            let group: Vec<&MetricsRow> = rows.iter().filter(|r| r.method == method && r.task == task).collect();
            let ok: Vec<&MetricsRow> = group.iter().copied().filter(|r| r.success).collect();
            let stat = |f: fn(&MetricsRow) -> f64| mean_std(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            SummaryRow {
                runs: group.len(),
                successes: ok.len(),
                success_rate: ok.len() as f64 / group.len() as f64,
                total_time: stat(|r| r.total_time),
                base_distance: stat(|r| r.base_distance),
                joint_distance: stat(|r| r.joint_distance),
                planning_time: stat(|r| r.planning_time),
                execution_time: stat(|r| r.execution_time),
                method,
                task,
            }
        })
        .collect()
}

const STAT_COLUMNS: [&str; 5] = ["total_time", "base_distance", "joint_distance", "planning_time", "execution_time"];

impl SummaryRow {
    fn stats(&self) -> [Option<Stat>; 5] {
        [self.total_time, self.base_distance, self.joint_distance, self.planning_time, self.execution_time]
    }
}

/// CSV with `<metric>_mean`/`<metric>_std` columns; empty cells where a
/// method had no successful runs.
pub fn write_summary_csv(summary: &[SummaryRow], mut w: impl Write) -> std::io::Result<()> {
    let mut header = vec!["method".to_string(), "task".into(), "runs".into(), "successes".into(), "success_rate".into()];
    for c in STAT_COLUMNS {
        header.push(format!("{c}_mean"));
        header.push(format!("{c}_std"));
    }
    writeln!(w, "# time and distance statistics are over successful runs only")?;
    writeln!(w, "{}", header.join(","))?;
    for s in summary {
        let mut cells = vec![s.method.clone(), s.task.to_string(), s.runs.to_string(), s.successes.to_string(), s.success_rate.to_string()];
        for st in s.stats() {
            match st {
                Some(st) => {
                    cells.push(st.mean.to_string());
                    cells.push(st.std.to_string());
                }
                None => cells.extend([String::new(), String::new()]),
            }
        }
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Fixed-width table with `mean (std)` cells.
pub fn format_summary(summary: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<9} {:>4} {:>8} {:>16} {:>16} {:>16} {:>16} {:>16}\n",
        "method", "task", "success", "total [s]", "base [m]", "joint [rad]", "planning [s]", "execution [s]"
    );
    for s in summary {
        out.push_str(&format!("{:<9} {:>4} {:>7.0}%", s.method, s.task, s.success_rate * 100.0));
        for st in s.stats() {
            let cell = st.map(|st| format!("{:.2} ({:.2})", st.mean, st.std)).unwrap_or_else(|| "-".into());
            out.push_str(&format!(" {cell:>16}"));
        }
        out.push('\n');
    }
    out.push_str("time and distance columns average successful runs only\n");
    out
}

/// Summed base displacement and summed absolute joint displacement along a
/// trace, starting from the header's initial state when present.
pub fn base_joint_distances(trace: &[TraceRecord]) -> (f64, f64) {
    let mut prev = None;
    let (mut base, mut joint) = (0.0, 0.0);
    for r in trace {
        let s = match r {
            TraceRecord::Header(h) => h.initial_state,
            TraceRecord::Step(s) => s.state,
        };
        if let Some(p) = prev {
            let p: wbc_core::robot::RobotState = p;
            base += p.base.position().dist(s.base.position());
            joint += (s.joints[0] - p.joints[0]).abs() + (s.joints[1] - p.joints[1]).abs();
        }
        prev = Some(s);
    }
    (base, joint)
}
