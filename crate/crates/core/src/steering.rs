//! Pure-pursuit steering.
//!
//! Sign convention: positive steering turns left (counterclockwise seen from
//! above). Angles are measured in the ground plane.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{signed_planar_angle, Point3};
use crate::path::Path;

/// Targets closer than this to the rear axle produce no steering.
pub const EPS_TARGET: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteerError {
    #[error("invalid pure pursuit parameter `{field}`: {reason}")]
    InvalidParam {
        field: &'static str,
        reason: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PurePursuitParams {
    /// Lookahead at zero speed, m. Must be at least the wheelbase.
    pub min_lookahead: f64,
    /// Lookahead growth per m/s of speed, s.
    pub speed_gain: f64,
    pub wheelbase: f64,
    /// Command units per radian of steering angle.
    pub k_steer: f64,
    pub u_steer_max: f64,
}

impl Default for PurePursuitParams {
    fn default() -> Self {
        Self {
            min_lookahead: 3.0,
            speed_gain: 0.5,
            wheelbase: 2.5,
            k_steer: 1.0,
            u_steer_max: 1.0,
        }
    }
}

impl PurePursuitParams {
    /// Gain for steer-angle vehicles: any angle beyond `max_steer_angle` saturates.
    pub fn steer_angle_gain(u_steer_max: f64, max_steer_angle: f64) -> f64 {
        u_steer_max / max_steer_angle
    }

    /// Gain for differential-steer (tracked) vehicles, inversely proportional
    /// to the turn rate; `reference_rate` (rad/s) is the rate that a unit gain
    /// corresponds to.
    pub fn tracked_gain(reference_rate: f64, max_yaw_rate: f64) -> f64 {
        reference_rate / max_yaw_rate
    }

    pub fn validate(&self) -> Result<(), SteerError> {
        let bad = |field, reason| Err(SteerError::InvalidParam { field, reason });
        if !(self.wheelbase.is_finite() && self.wheelbase > 0.0) {
            return bad("wheelbase", "must be positive");
        }
        if !(self.min_lookahead.is_finite() && self.min_lookahead >= self.wheelbase) {
            return bad("min_lookahead", "must be at least the wheelbase");
        }
        if !(self.speed_gain.is_finite() && self.speed_gain >= 0.0) {
            return bad("speed_gain", "must be non-negative");
        }
        if !(self.k_steer.is_finite() && self.k_steer > 0.0) {
            return bad("k_steer", "must be positive");
        }
        if !(self.u_steer_max.is_finite() && self.u_steer_max > 0.0) {
            return bad("u_steer_max", "must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteerComputation {
    /// Realized rear-axle to target distance used in the control law.
    pub lookahead: f64,
    pub target_point: Point3,
    pub alpha: f64,
    pub steer_angle: f64,
    pub command: f64,
    /// Target coincided with the rear axle; command forced to zero.
    pub degenerate: bool,
}

/// Speed-scaled lookahead; the scaling is switched off outside the corridor
/// and never shrinks the lookahead below its minimum when reversing.
pub fn lookahead_distance(v: f64, inside_corridor: bool, params: &PurePursuitParams) -> f64 {
    if inside_corridor {
        params.min_lookahead + params.speed_gain * v.max(0.0)
    } else {
        params.min_lookahead
    }
}

pub fn compute_target_point(path: &Path, rear_axle: Point3, lookahead: f64) -> Point3 {
    let s = path.project(rear_axle).arclength_s;
    path.point_at_arclength(s + lookahead)
}

/// Pure-pursuit law `delta = atan(2 L sin(alpha) / l_d)` scaled by `k_steer`
/// and clamped to `+-u_steer_max`.
pub fn pure_pursuit_command(
    rear_axle: Point3,
    heading: f64,
    target: Point3,
    params: &PurePursuitParams,
) -> SteerComputation {
    let to_target = (target - rear_axle).ground();
    let ld = to_target.norm();
    if ld < EPS_TARGET {
        return SteerComputation {
            lookahead: ld,
            target_point: target,
            alpha: 0.0,
            steer_angle: 0.0,
            command: 0.0,
            degenerate: true,
        };
    }
    let alpha = signed_planar_angle(Point3::from_heading(heading), to_target);
    let delta = (2.0 * params.wheelbase * alpha.sin() / ld).atan();
    let command = (params.k_steer * delta).clamp(-params.u_steer_max, params.u_steer_max);
    SteerComputation {
        lookahead: ld,
        target_point: target,
        alpha,
        steer_angle: delta,
        command,
        degenerate: false,
    }
}
