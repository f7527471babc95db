//! JSONL episode traces: one header line describing the scene, then one line
//! per control step.

use crate::geometry::Vec2;
use crate::pathref::RefPath;
use crate::reward::RewardTerms;
use crate::robot::{Action, RobotParams, RobotState};
use crate::sensors::LidarConfig;
use crate::world::WorldModel;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub seed: u64,
    pub world: WorldModel,
    pub path: RefPath,
    pub goal: Vec2,
    pub tolerance: f64,
    pub robot: RobotParams,
    pub lidars: [LidarConfig; 2],
    pub initial_state: RobotState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub state: RobotState,
    pub action: Action,
    pub terms: RewardTerms,
    pub reward: f64,
    pub ee: Vec2,
    pub goal_distance: f64,
    /// Front then rear scan, raw ranges in meters.
    pub scans: [Vec<f64>; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceRecord {
    Header(Box<TraceHeader>),
    Step(TraceStep),
}

impl TraceRecord {
    pub fn parse_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("trace record serializes")
    }
}

pub fn write_trace(mut w: impl Write, records: &[TraceRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(w, "{}", r.to_line())?;
    }
    w.flush()
}

/// Reads every parsable record; unparsable lines are reported by number and
/// skipped. Blank lines are ignored.
pub fn read_trace(r: impl BufRead) -> std::io::Result<(Vec<TraceRecord>, Vec<(usize, String)>)> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match TraceRecord::parse_line(&line) {
            Ok(rec) => records.push(rec),
            Err(e) => skipped.push((i + 1, e.to_string())),
        }
    }
    Ok((records, skipped))
}
