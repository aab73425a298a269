//! Per-tick orchestration: target speed, throttle, lookahead target,
//! steering, stuck detection, recovery override (in that order).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point3;
use crate::path::Path;
use crate::sim::{ControlCommand, VehicleKind, VehicleModelParams, VehicleState};
use crate::speed_control::{ControlError, PiController, PiParams};
use crate::steering::{
    compute_target_point, lookahead_distance, pure_pursuit_command, PurePursuitParams, SteerError,
};
use crate::stuck::{CommandLimits, StuckError, StuckManager, StuckMode, StuckParams};
use crate::target_speed::{compute_target_speed_into, TargetSpeedError, TargetSpeedParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FollowerError {
    #[error(transparent)]
    TargetSpeed(#[from] TargetSpeedError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Steer(#[from] SteerError),
    #[error(transparent)]
    Stuck(#[from] StuckError),
    #[error("time step must be positive, got {0}")]
    InvalidTimestep(f64),
    #[error("vehicle state is not finite")]
    NonFiniteState,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, PartialOrd, Ord,
)]
#[serde(rename_all = "snake_case")]
pub enum ControllerVariant {
    /// Bézier-curvature target speed with PI throttle.
    #[default]
    Proposed,
    /// Heading-angle target speed with P-only throttle.
    Baseline,
}

impl ControllerVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerVariant::Proposed => "proposed",
            ControllerVariant::Baseline => "baseline",
        }
    }
}

impl std::str::FromStr for ControllerVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proposed" => Ok(ControllerVariant::Proposed),
            "baseline" => Ok(ControllerVariant::Baseline),
            other => Err(format!("unknown controller variant `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FollowerConfig {
    pub target_speed: TargetSpeedParams,
    pub pi: PiParams,
    pub pursuit: PurePursuitParams,
    pub stuck: StuckParams,
    pub variant: ControllerVariant,
}

impl Default for FollowerConfig {
    fn default() -> Self {
        Self {
            target_speed: TargetSpeedParams::default(),
            pi: PiParams::default(),
            pursuit: PurePursuitParams::default(),
            stuck: StuckParams::default(),
            variant: ControllerVariant::Proposed,
        }
    }
}

impl FollowerConfig {
    /// Defaults with pursuit wheelbase, minimum lookahead and steering gain
    /// matched to `vehicle`.
    pub fn for_vehicle(vehicle: &VehicleModelParams, variant: ControllerVariant) -> Self {
        let mut cfg = Self {
            variant,
            ..Self::default()
        };
        let pursuit = &mut cfg.pursuit;
        pursuit.wheelbase = vehicle.wheelbase;
        pursuit.min_lookahead = pursuit.min_lookahead.max(vehicle.wheelbase);
        pursuit.k_steer = match vehicle.kind {
            VehicleKind::Tracked => PurePursuitParams::tracked_gain(1.0, vehicle.max_yaw_rate),
            _ => PurePursuitParams::steer_angle_gain(pursuit.u_steer_max, vehicle.max_steer_angle),
        };
        cfg
    }

    pub fn validate(&self) -> Result<(), FollowerError> {
        self.target_speed.validate()?;
        self.pi.validate()?;
        self.pursuit.validate()?;
        self.stuck.validate()?;
        Ok(())
    }

    pub fn limits(&self) -> CommandLimits {
        CommandLimits {
            throttle_min: self.pi.u_min,
            throttle_max: self.pi.u_max,
            steer_max: self.pursuit.u_steer_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickTelemetry {
    pub v_target: f64,
    pub kappa_max: f64,
    pub cte: f64,
    pub arclength_s: f64,
    pub inside_corridor: bool,
    pub lookahead: f64,
    pub alpha: f64,
    pub stuck_mode: StuckMode,
    pub stuck_events: u32,
    /// Controller output before any recovery override.
    pub base_command: ControlCommand,
    pub command: ControlCommand,
}

/// Pose the simulator should move the vehicle to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeleportDirective {
    pub position: Point3,
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickOutput {
    pub command: ControlCommand,
    pub telemetry: TickTelemetry,
    pub teleport: Option<TeleportDirective>,
}

/// Heading-angle target speed: `v_max * (1 - theta_max / pi)` where
/// `theta_max` is the largest ground-plane angle between the vehicle's
/// forward vector and any path segment within `spacing_dh * count_n` ahead.
pub fn baseline_target_speed(
    vehicle: &VehicleState,
    path: &Path,
    params: &TargetSpeedParams,
) -> f64 {
    let forward = vehicle.forward();
    let s_start = path.project(vehicle.position).arclength_s;
    let s_end = s_start + params.lookahead_span();
    let cumulative = path.cumulative_arclength();
    let waypoints = path.waypoints();
    let mut theta_max: f64 = 0.0;
    for i in 0..path.segment_count() {
        let (s0, s1) = (cumulative[i], cumulative[i + 1]);
        if s1 <= s_start || s0 > s_end {
            continue;
        }
        let dir = (waypoints[i + 1] - waypoints[i]).ground();
        if dir.norm_squared() == 0.0 {
            continue;
        }
        let theta = forward.cross(dir).norm().atan2(forward.dot(dir));
        theta_max = theta_max.max(theta);
    }
    let v = params.v_max * (1.0 - theta_max / std::f64::consts::PI);
    v.clamp(params.v_min, params.v_max)
}

/// Single-vehicle path follower.
#[derive(Debug, Clone)]
pub struct Follower {
    config: FollowerConfig,
    pi: PiController,
    stuck: StuckManager,
    clock: f64,
    path_fingerprint: Option<u64>,
    scratch: Vec<Point3>,
}

impl Follower {
    pub fn new(config: FollowerConfig) -> Result<Self, FollowerError> {
        config.validate()?;
        let mut pi_params = config.pi;
        if config.variant == ControllerVariant::Baseline {
            pi_params.ki = 0.0;
        }
        Ok(Self {
            pi: PiController::new(pi_params)?,
            stuck: StuckManager::new(config.stuck)?,
            config,
            clock: 0.0,
            path_fingerprint: None,
            scratch: Vec::with_capacity(config.target_speed.count_n),
        })
    }

    pub fn config(&self) -> &FollowerConfig {
        &self.config
    }

    pub fn speed_controller(&self) -> &PiController {
        &self.pi
    }

    pub fn stuck_manager(&self) -> &StuckManager {
        &self.stuck
    }

    /// Time accumulated over all ticks, s.
    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn tick(
        &mut self,
        vehicle: &VehicleState,
        path: &Path,
        dt: f64,
    ) -> Result<TickOutput, FollowerError> {
        self.tick_with_speed_limit(vehicle, path, dt, f64::INFINITY)
    }

    /// As [`Follower::tick`], with the target speed additionally capped at
    /// `speed_limit` (never below `v_min`). Used for arrival tapering.
    pub fn tick_with_speed_limit(
        &mut self,
        vehicle: &VehicleState,
        path: &Path,
        dt: f64,
        speed_limit: f64,
    ) -> Result<TickOutput, FollowerError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(FollowerError::InvalidTimestep(dt));
        }
        if !(vehicle.position.is_finite() && vehicle.heading.is_finite() && vehicle.v.is_finite()) {
            return Err(FollowerError::NonFiniteState);
        }
        if self.path_fingerprint != Some(path.fingerprint()) {
            if self.path_fingerprint.is_some() {
                self.stuck.clear_history();
            }
            self.path_fingerprint = Some(path.fingerprint());
        }
        let cfg = &self.config;

        // target speed
        let (v_raw, kappa) = match cfg.variant {
            ControllerVariant::Proposed => compute_target_speed_into(
                vehicle.position,
                path,
                &cfg.target_speed,
                &mut self.scratch,
            ),
            ControllerVariant::Baseline => {
                (baseline_target_speed(vehicle, path, &cfg.target_speed), 0.0)
            }
        };
        let v_target = v_raw.min(speed_limit).max(cfg.target_speed.v_min);

        // speed control; the controller is left untouched on error
        let throttle = self.pi.update(v_target, vehicle.v, dt)?;

        // steering
        let here = path.project(vehicle.position);
        let inside = here.cross_track_error <= path.corridor_half_width();
        let ld = lookahead_distance(vehicle.v, inside, &cfg.pursuit);
        let rear = vehicle.rear_axle();
        let target = compute_target_point(path, rear, ld);
        let steer = pure_pursuit_command(rear, vehicle.heading, target, &cfg.pursuit);

        let limits = cfg.limits();
        let base = limits.clamp(ControlCommand {
            throttle,
            steer: steer.command,
        });

        // stuck manager overrides last
        let t = self.clock + dt;
        let status = self.stuck.observe(here.arclength_s, base.throttle, t)?;
        self.clock = t;
        let over = self.stuck.recovery_override(base, dt, &limits);
        let teleport = over.teleport.then(|| {
            let tangent = path.tangent_at(here.arclength_s);
            TeleportDirective {
                position: here.closest_point,
                heading: tangent.y.atan2(tangent.x),
            }
        });

        let telemetry = TickTelemetry {
            v_target,
            kappa_max: kappa,
            cte: here.cross_track_error,
            arclength_s: here.arclength_s,
            inside_corridor: inside,
            lookahead: steer.lookahead,
            alpha: steer.alpha,
            stuck_mode: status.mode,
            stuck_events: status.events_total,
            base_command: base,
            command: over.command,
        };
        Ok(TickOutput {
            command: over.command,
            telemetry,
            teleport,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 1.0 / 60.0;

    fn p(x: f64, y: f64) -> Point3 {
        Point3::planar(x, y)
    }

    fn straight() -> Path {
        Path::new(vec![p(0.0, 0.0), p(500.0, 0.0)], 3.0).unwrap()
    }

    #[test]
    fn at_rest_on_straight_path() {
        let mut f = Follower::new(FollowerConfig::default()).unwrap();
        let v = VehicleState::at_rest(p(10.0, 0.0), 0.0, 2.5);
        let out = f.tick(&v, &straight(), DT).unwrap();
        assert_eq!(out.telemetry.v_target, 10.0);
        assert!(out.command.throttle > 0.0);
        assert_eq!(out.command.steer, 0.0);
        assert_eq!(out.telemetry.stuck_mode, StuckMode::Normal);
        assert!(out.teleport.is_none());
    }

    #[test]
    fn equilibrium_on_straight_path() {
        let mut f = Follower::new(FollowerConfig::default()).unwrap();
        let mut v = VehicleState::at_rest(p(10.0, 0.0), 0.0, 2.5);
        v.v = 10.0;
        let out = f.tick(&v, &straight(), DT).unwrap();
        assert_eq!(out.command.throttle, 0.0);
        assert_eq!(out.command.steer, 0.0);
        assert_eq!(f.speed_controller().integral(), 0.0);
    }

    #[test]
    fn stuck_vehicle_gets_override() {
        let mut f = Follower::new(FollowerConfig::default()).unwrap();
        let v = VehicleState::at_rest(p(10.0, 0.3), 0.0, 2.5);
        let path = straight();
        let mut last = None;
        for _ in 0..(3 * 60 + 5) {
            last = Some(f.tick(&v, &path, DT).unwrap());
        }
        let out = last.unwrap();
        assert_eq!(out.telemetry.stuck_mode, StuckMode::Reversing);
        assert_eq!(out.telemetry.stuck_events, 1);
        assert_ne!(out.command, out.telemetry.base_command);
        assert!(out.command.throttle < 0.0);
        assert_eq!(out.command.steer, -out.telemetry.base_command.steer);
    }

    #[test]
    fn baseline_examples() {
        let params = TargetSpeedParams::default();
        let v = VehicleState::at_rest(p(10.0, 0.0), 0.0, 2.5);
        assert_eq!(baseline_target_speed(&v, &straight(), &params), 10.0);

        let right_angle = Path::new(vec![p(0.0, 0.0), p(15.0, 0.0), p(15.0, 40.0)], 3.0).unwrap();
        let v = VehicleState::at_rest(p(5.0, 0.0), 0.0, 2.5);
        assert!((baseline_target_speed(&v, &right_angle, &params) - 5.0).abs() < 1e-12);

        let back = Path::new(vec![p(0.0, 0.0), p(15.0, 0.0), p(0.0, 0.0001)], 3.0).unwrap();
        assert_eq!(baseline_target_speed(&v, &back, &params), 1.0);

        // segment beyond the lookahead span is ignored
        let far = Path::new(vec![p(0.0, 0.0), p(100.0, 0.0), p(100.0, 40.0)], 3.0).unwrap();
        assert_eq!(baseline_target_speed(&v, &far, &params), 10.0);
    }

    #[test]
    fn baseline_variant_is_proportional_only() {
        let cfg = FollowerConfig {
            variant: ControllerVariant::Baseline,
            ..Default::default()
        };
        let mut f = Follower::new(cfg).unwrap();
        let v = VehicleState::at_rest(p(10.0, 0.0), 0.0, 2.5);
        for _ in 0..30 {
            f.tick(&v, &straight(), DT).unwrap();
        }
        assert_eq!(f.speed_controller().params().ki, 0.0);
        assert_eq!(f.speed_controller().integral(), 0.0);
    }

    #[test]
    fn deterministic_ticks() {
        let run = || {
            let mut f = Follower::new(FollowerConfig::default()).unwrap();
            let path = Path::new(vec![p(0.0, 0.0), p(20.0, 0.0), p(20.0, 20.0)], 3.0).unwrap();
            let v = VehicleState::at_rest(p(1.0, 0.5), 0.1, 2.5);
            (0..50)
                .map(|_| f.tick(&v, &path, DT).unwrap().command)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn invalid_inputs() {
        let mut f = Follower::new(FollowerConfig::default()).unwrap();
        let v = VehicleState::at_rest(p(10.0, 0.0), 0.0, 2.5);
        assert!(matches!(
            f.tick(&v, &straight(), 0.0),
            Err(FollowerError::InvalidTimestep(_))
        ));
        let mut bad = v;
        bad.v = f64::NAN;
        assert!(matches!(
            f.tick(&bad, &straight(), DT),
            Err(FollowerError::NonFiniteState)
        ));
    }

    #[test]
    fn for_vehicle_matches_geometry() {
        let cfg = FollowerConfig::for_vehicle(
            &VehicleModelParams::tracked(),
            ControllerVariant::Proposed,
        );
        assert_eq!(cfg.pursuit.wheelbase, 3.5);
        assert!(cfg.pursuit.min_lookahead >= 3.5);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn variant_parsing() {
        assert_eq!(
            "Proposed".parse::<ControllerVariant>(),
            Ok(ControllerVariant::Proposed)
        );
        assert_eq!(
            "baseline".parse::<ControllerVariant>(),
            Ok(ControllerVariant::Baseline)
        );
        assert!("pid".parse::<ControllerVariant>().is_err());
    }
}
