//! Fixed-step kinematic plant models and the scenario environment.
//!
//! Dynamics are planar. Each step updates speed first, then heading, then
//! position using the new speed and the mid-step heading (semi-implicit
//! Euler with a midpoint rotation).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_angle, Point3};

/// Default control and integration rate, Hz.
pub const DEFAULT_TICK_RATE: f64 = 60.0;
pub const MAX_DT: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("time step must be in (0, {MAX_DT}], got {0}")]
    InvalidTimestep(f64),
    #[error("invalid vehicle parameter `{field}`: {reason}")]
    InvalidParam {
        field: &'static str,
        reason: &'static str,
    },
}

/// Observable plant state. `position` is the vehicle centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub position: Point3,
    /// Ground-plane yaw, radians in (-pi, pi].
    pub heading: f64,
    /// Signed speed along the forward axis; negative when reversing.
    pub v: f64,
    pub wheelbase: f64,
    /// Current road-wheel angle (bicycle models), radians.
    pub steer_angle: f64,
}

impl VehicleState {
    pub fn at_rest(position: Point3, heading: f64, wheelbase: f64) -> Self {
        Self {
            position,
            heading: normalize_angle(heading),
            v: 0.0,
            wheelbase,
            steer_angle: 0.0,
        }
    }

    pub fn forward(&self) -> Point3 {
        Point3::from_heading(self.heading)
    }

    /// Centre minus half a wheelbase along the forward axis.
    pub fn rear_axle(&self) -> Point3 {
        self.position - self.forward() * (0.5 * self.wheelbase)
    }
}

/// Throttle and steering inputs; negative throttle brakes / reverses.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlCommand {
    pub throttle: f64,
    pub steer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleKind {
    Bicycle,
    /// Differential steering; yaw rate independent of speed.
    Tracked,
    /// Bicycle with yaw and longitudinal response scaled by `traction_factor`.
    LowTraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleModelParams {
    pub kind: VehicleKind,
    pub wheelbase: f64,
    /// Road-wheel angle at full steering command, radians.
    pub max_steer_angle: f64,
    /// rad/s
    pub steer_rate_limit: f64,
    /// m/s^2 per unit throttle.
    pub accel_gain: f64,
    /// Linear drag, 1/s.
    pub drag: f64,
    /// Tracked only, rad/s at full steering command.
    #[serde(default = "default_yaw_rate")]
    pub max_yaw_rate: f64,
    /// LowTraction only, in (0, 1].
    #[serde(default = "default_traction")]
    pub traction_factor: f64,
}

fn default_yaw_rate() -> f64 {
    1.0
}

fn default_traction() -> f64 {
    1.0
}

impl VehicleModelParams {
    /// Nimble car-like vehicle.
    pub fn agile() -> Self {
        Self {
            kind: VehicleKind::Bicycle,
            wheelbase: 2.5,
            max_steer_angle: 0.6,
            steer_rate_limit: 2.0,
            accel_gain: 4.0,
            drag: 0.1,
            max_yaw_rate: 1.0,
            traction_factor: 1.0,
        }
    }

    /// Heavy tracked vehicle with a slow turn rate.
    pub fn tracked() -> Self {
        Self {
            kind: VehicleKind::Tracked,
            wheelbase: 3.5,
            max_steer_angle: 0.5,
            steer_rate_limit: 2.0,
            accel_gain: 3.0,
            drag: 0.15,
            max_yaw_rate: 0.7,
            traction_factor: 1.0,
        }
    }

    /// Long wheelbase, sluggish steering and poor grip.
    pub fn low_traction() -> Self {
        Self {
            kind: VehicleKind::LowTraction,
            wheelbase: 3.2,
            max_steer_angle: 0.45,
            steer_rate_limit: 1.0,
            accel_gain: 3.5,
            drag: 0.05,
            max_yaw_rate: 1.0,
            traction_factor: 0.6,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |field, reason| Err(SimError::InvalidParam { field, reason });
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.wheelbase) {
            return bad("wheelbase", "must be positive");
        }
        if !positive(self.max_steer_angle) || self.max_steer_angle >= std::f64::consts::FRAC_PI_2 {
            return bad("max_steer_angle", "must be in (0, pi/2)");
        }
        if !positive(self.steer_rate_limit) {
            return bad("steer_rate_limit", "must be positive");
        }
        if !positive(self.accel_gain) {
            return bad("accel_gain", "must be positive");
        }
        if !(self.drag.is_finite() && self.drag >= 0.0) {
            return bad("drag", "must be non-negative");
        }
        if !positive(self.max_yaw_rate) {
            return bad("max_yaw_rate", "must be positive");
        }
        if !(positive(self.traction_factor) && self.traction_factor <= 1.0) {
            return bad("traction_factor", "must be in (0, 1]");
        }
        Ok(())
    }
}

/// Impassable segment in the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wall {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

/// Disc-shaped hill region. Inside it the vehicle feels a resistive
/// deceleration that can stall it but never pushes it backwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeRegion {
    pub center: [f64; 2],
    pub radius: f64,
    /// m/s^2
    pub decel: f64,
}

impl SlopeRegion {
    pub fn contains(&self, p: Point3) -> bool {
        let dx = p.x - self.center[0];
        let dy = p.y - self.center[1];
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Environment {
    pub walls: Vec<Wall>,
    pub slopes: Vec<SlopeRegion>,
}

impl Environment {
    pub fn slope_decel(&self, p: Point3) -> f64 {
        self.slopes
            .iter()
            .filter(|r| r.contains(p))
            .map(|r| r.decel)
            .fold(0.0, f64::max)
    }

    /// True if moving from `from` to `to` crosses (or touches) any wall.
    pub fn blocks(&self, from: Point3, to: Point3) -> bool {
        self.walls
            .iter()
            .any(|w| segments_intersect([from.x, from.y], [to.x, to.y], w.a, w.b))
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test.
pub fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub state: VehicleState,
    /// A wall stopped the vehicle this step.
    pub wall_contact: bool,
}

/// Advances the plant by `dt`. Commands are expected in `[-1, 1]`.
pub fn step(
    model: &VehicleModelParams,
    state: &VehicleState,
    cmd: ControlCommand,
    env: &Environment,
    dt: f64,
) -> Result<StepResult, SimError> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(SimError::InvalidTimestep(dt));
    }
    let traction = match model.kind {
        VehicleKind::LowTraction => model.traction_factor,
        _ => 1.0,
    };

    // steering actuator
    let mut steer_angle = state.steer_angle;
    if model.kind != VehicleKind::Tracked {
        let wanted = cmd.steer * model.max_steer_angle;
        let max_change = model.steer_rate_limit * dt;
        steer_angle += (wanted - steer_angle).clamp(-max_change, max_change);
    }

    // longitudinal
    let drive = traction * (model.accel_gain * cmd.throttle - model.drag * state.v);
    let resist = traction * env.slope_decel(state.position);
    let mut v = state.v + drive * dt;
    if resist > 0.0 {
        let r = resist * dt;
        v = if v > r {
            v - r
        } else if v < -r {
            v + r
        } else {
            0.0
        };
    }

    let yaw_rate = match model.kind {
        VehicleKind::Tracked => cmd.steer * model.max_yaw_rate,
        VehicleKind::Bicycle => v * steer_angle.tan() / state.wheelbase,
        VehicleKind::LowTraction => traction * v * steer_angle.tan() / state.wheelbase,
    };
    let heading = normalize_angle(state.heading + yaw_rate * dt);
    // advance along the mid-step heading
    let candidate =
        state.position + Point3::from_heading(state.heading + 0.5 * yaw_rate * dt) * (v * dt);

    let mut next = VehicleState {
        position: candidate,
        heading,
        v,
        wheelbase: state.wheelbase,
        steer_angle,
    };
    let wall_contact = v != 0.0 && env.blocks(state.position, candidate);
    if wall_contact {
        next.position = state.position;
        next.heading = state.heading;
        next.v = 0.0;
    }
    Ok(StepResult {
        state: next,
        wall_contact,
    })
}
