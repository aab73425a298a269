//! Per-run metrics, JSON reports and CSV traces.

use std::io::Write;

use pathfollow_core::ControllerVariant;
use serde::{Deserialize, Serialize};

pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const TRACE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub format_version: u32,
    pub scenario: String,
    pub variant: ControllerVariant,
    pub completed: bool,
    /// Time to reach the goal, or the time limit when not completed.
    pub total_time: f64,
    pub stuck_events: u32,
    pub teleports: u32,
    pub cte_mean: f64,
    pub inside_corridor_pct: f64,
    pub speed_mean: f64,
    pub ticks: u64,
}

/// Running per-frame aggregates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrameMetrics {
    frames: u64,
    cte_sum: f64,
    inside: u64,
    speed_sum: f64,
}

impl FrameMetrics {
    pub fn push(&mut self, cte: f64, inside: bool, v: f64) {
        self.frames += 1;
        self.cte_sum += cte;
        self.inside += u64::from(inside);
        self.speed_sum += v.abs();
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn cte_mean(&self) -> f64 {
        self.mean(self.cte_sum)
    }

    pub fn inside_pct(&self) -> f64 {
        if self.frames == 0 {
            return 100.0;
        }
        100.0 * self.inside as f64 / self.frames as f64
    }

    pub fn speed_mean(&self) -> f64 {
        self.mean(self.speed_sum)
    }

    fn mean(&self, sum: f64) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            sum / self.frames as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub heading: f64,
    pub v: f64,
    pub v_target: f64,
    pub throttle: f64,
    pub steer: f64,
    pub cte: f64,
    pub inside_corridor: u8,
    pub stuck_mode: &'static str,
}

/// Writes a `# format_version=N` line followed by a headed CSV table.
pub fn write_trace<W: Write>(mut out: W, rows: &[TraceRow]) -> anyhow::Result<()> {
    writeln!(out, "# format_version={TRACE_FORMAT_VERSION}")?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "t",
            "x",
            "y",
            "z",
            "heading",
            "v",
            "v_target",
            "throttle",
            "steer",
            "cte",
            "inside_corridor",
            "stuck_mode",
        ])?;
    }
    w.flush()?;
    Ok(())
}
