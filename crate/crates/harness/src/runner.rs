//! Closed-loop execution of one scenario: follower plus plant at a fixed tick.

use pathfollow_core::sim::{step, DEFAULT_TICK_RATE};
use pathfollow_core::{ControllerVariant, Follower, Point3, VehicleState};

use crate::report::{FrameMetrics, ScenarioReport, TraceRow, REPORT_FORMAT_VERSION};
use crate::scenario::ResolvedScenario;

/// Perturbation of the spawn pose: lateral offset to the left of the first
/// tangent (meters) and heading offset (radians).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpawnJitter {
    pub lateral: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub tick_rate: f64,
    /// Overrides the scenario's controller variant.
    pub variant: Option<ControllerVariant>,
    pub jitter: SpawnJitter,
    pub record_trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tick_rate: DEFAULT_TICK_RATE,
            variant: None,
            jitter: SpawnJitter::default(),
            record_trace: false,
        }
    }
}

/// Timestamps of notable events, seconds since spawn.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunEvents {
    pub wall_contacts: Vec<f64>,
    pub stuck_events: Vec<f64>,
    pub teleports: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: ScenarioReport,
    pub trace: Vec<TraceRow>,
    pub events: RunEvents,
    pub final_state: VehicleState,
}

/// Speed cap that tapers linearly from `v_max` at 2R remaining to `v_min` at R.
pub fn arrival_speed_limit(remaining: f64, goal_radius: f64, v_min: f64, v_max: f64) -> f64 {
    if remaining >= 2.0 * goal_radius {
        return f64::INFINITY;
    }
    let frac = ((remaining - goal_radius) / goal_radius).clamp(0.0, 1.0);
    v_min + (v_max - v_min) * frac
}

pub fn run_scenario(scn: &ResolvedScenario, opts: &RunOptions) -> anyhow::Result<RunOutcome> {
    anyhow::ensure!(
        opts.tick_rate.is_finite() && opts.tick_rate >= 10.0,
        "tick rate must be at least 10 Hz, got {}",
        opts.tick_rate
    );
    let dt = 1.0 / opts.tick_rate;
    let mut config = scn.follower;
    if let Some(v) = opts.variant {
        config.variant = v;
    }
    let mut follower = Follower::new(config)?;
    let path = &scn.path;
    let total = path.total_arclength();
    let goal = path.last();
    let ts = config.target_speed;

    let tangent = path.tangent_at(0.0);
    let heading0 = tangent.y.atan2(tangent.x);
    let left = Point3::from_heading(heading0 + std::f64::consts::FRAC_PI_2);
    let mut state = VehicleState::at_rest(
        path.first() + left * opts.jitter.lateral,
        heading0 + opts.jitter.heading,
        scn.vehicle.wheelbase,
    );

    let steps = (scn.time_limit * opts.tick_rate).ceil() as u64;
    let mut metrics = FrameMetrics::default();
    let mut trace = Vec::new();
    let mut events = RunEvents::default();
    let mut completed_at = None;
    let mut last_events = 0;

    for k in 0..steps {
        let t = k as f64 * dt;
        let here = path.project(state.position);
        state.position.z = here.closest_point.z;
        let remaining = total - here.arclength_s;
        // the arc-length condition keeps loops from finishing at the start
        if state.position.distance(goal) <= scn.goal_radius && remaining <= 2.0 * scn.goal_radius {
            completed_at = Some(t);
            break;
        }
        let limit = arrival_speed_limit(remaining, scn.goal_radius, ts.v_min, ts.v_max);
        let out = follower.tick_with_speed_limit(&state, path, dt, limit)?;
        let tel = &out.telemetry;
        metrics.push(tel.cte, tel.inside_corridor, state.v);
        if tel.stuck_events > last_events {
            last_events = tel.stuck_events;
            events.stuck_events.push(t + dt);
        }
        if opts.record_trace {
            trace.push(TraceRow {
                t,
                x: state.position.x,
                y: state.position.y,
                z: state.position.z,
                heading: state.heading,
                v: state.v,
                v_target: tel.v_target,
                throttle: out.command.throttle,
                steer: out.command.steer,
                cte: tel.cte,
                inside_corridor: u8::from(tel.inside_corridor),
                stuck_mode: tel.stuck_mode.as_str(),
            });
        }

        if let Some(tp) = out.teleport {
            events.teleports.push(t + dt);
            state = VehicleState {
                position: tp.position,
                heading: tp.heading,
                v: 0.0,
                wheelbase: state.wheelbase,
                steer_angle: 0.0,
            };
            continue;
        }
        let res = step(&scn.vehicle, &state, out.command, &scn.env, dt)?;
        if res.wall_contact {
            events.wall_contacts.push(t + dt);
        }
        state = res.state;
    }

    let report = ScenarioReport {
        format_version: REPORT_FORMAT_VERSION,
        scenario: scn.name.clone(),
        variant: config.variant,
        completed: completed_at.is_some(),
        total_time: completed_at.unwrap_or(scn.time_limit),
        stuck_events: follower.stuck_manager().status().events_total,
        teleports: events.teleports.len() as u32,
        cte_mean: metrics.cte_mean(),
        inside_corridor_pct: metrics.inside_pct(),
        speed_mean: metrics.speed_mean(),
        ticks: metrics.frames(),
    };
    Ok(RunOutcome {
        report,
        trace,
        events,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taper_shape() {
        assert_eq!(arrival_speed_limit(10.0, 2.0, 1.0, 10.0), f64::INFINITY);
        assert_eq!(arrival_speed_limit(3.0, 2.0, 1.0, 10.0), 5.5);
        assert_eq!(arrival_speed_limit(2.0, 2.0, 1.0, 10.0), 1.0);
        assert_eq!(arrival_speed_limit(0.5, 2.0, 1.0, 10.0), 1.0);
    }
}
