//! Stuck detection and recovery.
//!
//! Progress is the arc length of the vehicle's projection on the path. The
//! vehicle is stuck when, over a full observation window, that arc length
//! spans less than `min_progress` while throttle is being applied. The first
//! `max_recovery_attempts` events back the vehicle up with inverted throttle
//! and steering; the next one asks the simulator to teleport the vehicle onto
//! the path (if enabled).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::ControlCommand;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StuckError {
    #[error("observation time {t} does not advance past {last}")]
    TimeRegression { t: f64, last: f64 },
    #[error("invalid stuck parameter `{field}`: {reason}")]
    InvalidParam {
        field: &'static str,
        reason: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StuckParams {
    /// Observation window, s.
    pub window_t: f64,
    /// Minimum arc-length progress over the window, m.
    pub min_progress: f64,
    pub reverse_duration: f64,
    pub max_recovery_attempts: u32,
    pub teleport_enabled: bool,
    /// Throttle magnitude used while reversing.
    pub reverse_throttle: f64,
    /// Mean |throttle| above which a lack of progress counts as stuck.
    pub throttle_gate: f64,
    /// Progress past the last stuck position that clears the attempt count, m.
    pub clear_distance: f64,
}

impl Default for StuckParams {
    fn default() -> Self {
        Self {
            window_t: 3.0,
            min_progress: 0.5,
            reverse_duration: 1.5,
            max_recovery_attempts: 2,
            teleport_enabled: true,
            reverse_throttle: 0.6,
            throttle_gate: 0.05,
            clear_distance: 5.0,
        }
    }
}

impl StuckParams {
    pub fn validate(&self) -> Result<(), StuckError> {
        let bad = |field, reason| Err(StuckError::InvalidParam { field, reason });
        if !(self.window_t.is_finite() && self.window_t > 0.0) {
            return bad("window_t", "must be positive");
        }
        if !(self.min_progress.is_finite() && self.min_progress > 0.0) {
            return bad("min_progress", "must be positive");
        }
        if !(self.reverse_duration.is_finite() && self.reverse_duration > 0.0) {
            return bad("reverse_duration", "must be positive");
        }
        if self.max_recovery_attempts < 1 {
            return bad("max_recovery_attempts", "must be at least 1");
        }
        if !(self.reverse_throttle.is_finite() && self.reverse_throttle >= 0.0) {
            return bad("reverse_throttle", "must be non-negative");
        }
        if !(self.throttle_gate.is_finite() && self.throttle_gate >= 0.0) {
            return bad("throttle_gate", "must be non-negative");
        }
        if !(self.clear_distance.is_finite() && self.clear_distance > 0.0) {
            return bad("clear_distance", "must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StuckMode {
    Normal,
    Reversing,
    /// Lasts a single tick; the simulator relocates the vehicle.
    Teleported,
}

impl StuckMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            StuckMode::Normal => "normal",
            StuckMode::Reversing => "reversing",
            StuckMode::Teleported => "teleported",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StuckStatus {
    pub mode: StuckMode,
    pub events_total: u32,
    pub attempt_index: u32,
    pub time_in_mode: f64,
}

/// Output of [`StuckManager::recovery_override`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Override {
    pub command: ControlCommand,
    /// Relocate the vehicle onto the path this tick.
    pub teleport: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Sample {
    t: f64,
    s: f64,
    throttle_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StuckManager {
    params: StuckParams,
    history: VecDeque<Sample>,
    mode: StuckMode,
    events_total: u32,
    attempt_index: u32,
    time_in_mode: f64,
    last_t: Option<f64>,
    stuck_at_s: Option<f64>,
}

impl StuckManager {
    pub fn new(params: StuckParams) -> Result<Self, StuckError> {
        params.validate()?;
        Ok(Self {
            params,
            history: VecDeque::new(),
            mode: StuckMode::Normal,
            events_total: 0,
            attempt_index: 0,
            time_in_mode: 0.0,
            last_t: None,
            stuck_at_s: None,
        })
    }

    pub fn params(&self) -> &StuckParams {
        &self.params
    }

    pub fn status(&self) -> StuckStatus {
        StuckStatus {
            mode: self.mode,
            events_total: self.events_total,
            attempt_index: self.attempt_index,
            time_in_mode: self.time_in_mode,
        }
    }

    /// Drops the progress history (e.g. after the path changed).
    pub fn clear_history(&mut self) {
        self.history.clear();
    }

    /// Records progress `s` (m) and the commanded throttle at time `t` (s).
    pub fn observe(&mut self, s: f64, throttle: f64, t: f64) -> Result<StuckStatus, StuckError> {
        if let Some(last) = self.last_t {
            if t.is_nan() || t <= last {
                return Err(StuckError::TimeRegression { t, last });
            }
        }
        self.last_t = Some(t);

        match self.mode {
            StuckMode::Teleported => {
                // the directive was consumed on the previous tick
                self.enter(StuckMode::Normal);
            }
            StuckMode::Reversing => return Ok(self.status()),
            StuckMode::Normal => {}
        }

        if let Some(at) = self.stuck_at_s {
            if s >= at + self.params.clear_distance {
                self.attempt_index = 0;
                self.stuck_at_s = None;
            }
        }

        self.history.push_back(Sample {
            t,
            s,
            throttle_abs: throttle.abs(),
        });
        let horizon = t - self.params.window_t;
        // keep the newest sample at or before the horizon so the history spans the window
        while self.history.len() >= 2 && self.history[1].t <= horizon {
            self.history.pop_front();
        }
        let spans_window = self.history.front().is_some_and(|f| f.t <= horizon + 1e-9);
        if !spans_window {
            return Ok(self.status());
        }

        let (mut lo, mut hi, mut throttle_sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for sample in &self.history {
            lo = lo.min(sample.s);
            hi = hi.max(sample.s);
            throttle_sum += sample.throttle_abs;
        }
        let mean_throttle = throttle_sum / self.history.len() as f64;
        if hi - lo < self.params.min_progress && mean_throttle > self.params.throttle_gate {
            self.fire_event(hi);
        }
        Ok(self.status())
    }

    fn fire_event(&mut self, s: f64) {
        self.events_total += 1;
        self.stuck_at_s = Some(self.stuck_at_s.map_or(s, |prev| prev.max(s)));
        if self.attempt_index >= self.params.max_recovery_attempts {
            if self.params.teleport_enabled {
                self.attempt_index = 0;
                self.enter(StuckMode::Teleported);
            } else {
                self.enter(StuckMode::Reversing);
            }
        } else {
            self.attempt_index += 1;
            self.enter(StuckMode::Reversing);
        }
    }

    fn enter(&mut self, mode: StuckMode) {
        self.mode = mode;
        self.time_in_mode = 0.0;
        self.history.clear();
    }

    /// Replaces `base` while a recovery is running; identity in normal mode.
    /// Output stays within `[throttle_min, throttle_max]` and `+-steer_max`.
    pub fn recovery_override(
        &mut self,
        base: ControlCommand,
        dt: f64,
        limits: &CommandLimits,
    ) -> Override {
        match self.mode {
            StuckMode::Normal => Override {
                command: base,
                teleport: false,
            },
            StuckMode::Reversing => {
                let dir = if base.throttle < 0.0 { 1.0 } else { -1.0 };
                let command = limits.clamp(ControlCommand {
                    throttle: dir * self.params.reverse_throttle.abs(),
                    steer: -base.steer,
                });
                self.time_in_mode += dt;
                if self.time_in_mode >= self.params.reverse_duration - 1e-9 {
                    self.enter(StuckMode::Normal);
                }
                Override {
                    command,
                    teleport: false,
                }
            }
            StuckMode::Teleported => {
                self.time_in_mode += dt;
                Override {
                    command: ControlCommand::default(),
                    teleport: true,
                }
            }
        }
    }
}

/// Actuator limits shared by controller and override output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandLimits {
    pub throttle_min: f64,
    pub throttle_max: f64,
    pub steer_max: f64,
}

impl CommandLimits {
    pub fn clamp(&self, c: ControlCommand) -> ControlCommand {
        ControlCommand {
            throttle: c.throttle.clamp(self.throttle_min, self.throttle_max),
            steer: c.steer.clamp(-self.steer_max, self.steer_max),
        }
    }

    pub fn contains(&self, c: &ControlCommand) -> bool {
        (self.throttle_min..=self.throttle_max).contains(&c.throttle)
            && (-self.steer_max..=self.steer_max).contains(&c.steer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 1.0 / 60.0;
    const LIMITS: CommandLimits = CommandLimits {
        throttle_min: -1.0,
        throttle_max: 1.0,
        steer_max: 1.0,
    };

    fn manager(params: StuckParams) -> StuckManager {
        StuckManager::new(params).unwrap()
    }

    /// Runs `ticks` frozen ticks starting after `t0`; returns the time of the first event.
    fn freeze(
        m: &mut StuckManager,
        t0: f64,
        ticks: usize,
        s: f64,
        throttle: f64,
    ) -> (f64, Option<f64>) {
        let mut t = t0;
        let mut first = None;
        let before = m.status().events_total;
        for _ in 0..ticks {
            t += DT;
            let st = m.observe(s, throttle, t).unwrap();
            if first.is_none() && st.events_total > before {
                first = Some(t);
            }
            m.recovery_override(
                ControlCommand {
                    throttle,
                    steer: 0.2,
                },
                DT,
                &LIMITS,
            );
        }
        (t, first)
    }

    #[test]
    fn advancing_vehicle_stays_normal() {
        let mut m = manager(StuckParams::default());
        let mut t = 0.0;
        for k in 0..6000 {
            t += DT;
            let st = m.observe(5.0 * k as f64 * DT, 0.6, t).unwrap();
            assert_eq!(st.mode, StuckMode::Normal);
        }
        assert_eq!(m.status().events_total, 0);
    }

    #[test]
    fn frozen_progress_under_throttle_fires_once() {
        let mut m = manager(StuckParams {
            window_t: 3.0,
            min_progress: 0.5,
            ..Default::default()
        });
        let (_, first) = freeze(&mut m, 0.0, 181, 12.0, 0.6);
        let fired = first.expect("stuck event");
        assert!((3.0..=3.0 + 2.0 * DT).contains(&fired), "fired at {fired}");
        assert_eq!(m.status().events_total, 1);
        assert_eq!(m.status().mode, StuckMode::Reversing);
    }

    #[test]
    fn intentional_stop_is_not_stuck() {
        let mut m = manager(StuckParams::default());
        freeze(&mut m, 0.0, 600, 12.0, 0.0);
        assert_eq!(m.status().events_total, 0);
        assert_eq!(m.status().mode, StuckMode::Normal);
    }

    #[test]
    fn time_regression_rejected() {
        let mut m = manager(StuckParams::default());
        m.observe(0.0, 0.0, 1.0).unwrap();
        assert_eq!(
            m.observe(0.0, 0.0, 1.0),
            Err(StuckError::TimeRegression { t: 1.0, last: 1.0 })
        );
    }

    #[test]
    fn normal_mode_passes_through() {
        let mut m = manager(StuckParams::default());
        let base = ControlCommand {
            throttle: 0.7,
            steer: -0.2,
        };
        let o = m.recovery_override(base, DT, &LIMITS);
        assert_eq!(o.command, base);
        assert!(!o.teleport);
    }

    #[test]
    fn reversing_inverts_then_returns_to_normal() {
        let params = StuckParams::default();
        let mut m = manager(params);
        let (mut t, _) = freeze(&mut m, 0.0, 181, 12.0, 0.6);
        assert_eq!(m.status().mode, StuckMode::Reversing);

        let base = ControlCommand {
            throttle: 0.8,
            steer: 0.3,
        };
        let mut reversing_ticks = 0;
        while m.status().mode == StuckMode::Reversing {
            t += DT;
            m.observe(12.0, 0.8, t).unwrap();
            let o = m.recovery_override(base, DT, &LIMITS);
            assert_eq!(
                o.command,
                ControlCommand {
                    throttle: -0.6,
                    steer: -0.3
                }
            );
            reversing_ticks += 1;
            assert!(reversing_ticks < 1000);
        }
        // 1.5 s at 60 Hz, the firing tick's override included
        assert!((89..=91).contains(&reversing_ticks), "{reversing_ticks}");
        assert_eq!(m.status().mode, StuckMode::Normal);
        assert_eq!(m.status().events_total, 1);
    }

    #[test]
    fn escalates_to_teleport_after_attempts() {
        let params = StuckParams {
            max_recovery_attempts: 2,
            teleport_enabled: true,
            ..Default::default()
        };
        let mut m = manager(params);
        let mut t = 0.0;
        let mut teleports = 0;
        let mut modes = Vec::new();
        for _ in 0..3 {
            let before = m.status().events_total;
            while m.status().events_total == before {
                t += DT;
                m.observe(12.0, 0.6, t).unwrap();
                let o = m.recovery_override(
                    ControlCommand {
                        throttle: 0.6,
                        steer: 0.0,
                    },
                    DT,
                    &LIMITS,
                );
                if o.teleport {
                    teleports += 1;
                }
                assert!(t < 60.0);
            }
            modes.push(m.status().mode);
            // drain the recovery
            while m.status().mode != StuckMode::Normal {
                t += DT;
                m.observe(12.0, 0.6, t).unwrap();
                if m.recovery_override(
                    ControlCommand {
                        throttle: 0.6,
                        steer: 0.0,
                    },
                    DT,
                    &LIMITS,
                )
                .teleport
                {
                    teleports += 1;
                }
            }
        }
        assert_eq!(
            modes,
            vec![
                StuckMode::Reversing,
                StuckMode::Reversing,
                StuckMode::Teleported
            ]
        );
        assert_eq!(teleports, 1);
        assert_eq!(m.status().attempt_index, 0);
        assert_eq!(m.status().events_total, 3);
    }

    #[test]
    fn teleport_disabled_never_teleports() {
        let params = StuckParams {
            max_recovery_attempts: 1,
            teleport_enabled: false,
            ..Default::default()
        };
        let mut m = manager(params);
        let mut t = 0.0;
        for _ in 0..(60 * 120) {
            t += DT;
            let st = m.observe(3.0, 0.9, t).unwrap();
            assert_ne!(st.mode, StuckMode::Teleported);
            assert!(st.attempt_index <= 1);
            let o = m.recovery_override(
                ControlCommand {
                    throttle: 0.9,
                    steer: 0.1,
                },
                DT,
                &LIMITS,
            );
            assert!(!o.teleport);
        }
        assert!(m.status().events_total > 5);
    }

    #[test]
    fn progress_past_blockage_clears_attempts() {
        let mut m = manager(StuckParams::default());
        let (mut t, _) = freeze(&mut m, 0.0, 181, 12.0, 0.6);
        assert_eq!(m.status().attempt_index, 1);
        while m.status().mode != StuckMode::Normal {
            t += DT;
            m.observe(12.0, 0.6, t).unwrap();
            m.recovery_override(
                ControlCommand {
                    throttle: 0.6,
                    steer: 0.0,
                },
                DT,
                &LIMITS,
            );
        }
        let mut s = 12.0;
        for _ in 0..120 {
            t += DT;
            s += 5.0 * DT;
            m.observe(s, 0.6, t).unwrap();
        }
        assert_eq!(m.status().attempt_index, 0);
    }

    #[test]
    fn override_respects_limits() {
        let mut m = manager(StuckParams {
            reverse_throttle: 2.5,
            ..Default::default()
        });
        let narrow = CommandLimits {
            throttle_min: -0.5,
            throttle_max: 0.5,
            steer_max: 0.4,
        };
        freeze(&mut m, 0.0, 181, 1.0, 0.5);
        let o = m.recovery_override(
            ControlCommand {
                throttle: 0.5,
                steer: 0.4,
            },
            DT,
            &narrow,
        );
        assert!(narrow.contains(&o.command));
        assert_eq!(o.command.throttle, -0.5);
    }
}
