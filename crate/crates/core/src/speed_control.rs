//! PI throttle controller.
//!
//! Three guards sit on the integral term:
//! * a rolling window of recent setpoints; when it spans both directions or
//!   spreads more than `reset_dv`, the window and the integral are cleared,
//! * a dead band of width `deadband_de` around zero error where integration
//!   is paused,
//! * conditional integration: when the output saturates in the direction of
//!   the error, the tentative integral update is undone.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("non-finite controller input `{0}`")]
    NonFinite(&'static str),
    #[error("time step must be positive, got {0}")]
    InvalidTimestep(f64),
    #[error("invalid controller parameter `{field}`: {reason}")]
    InvalidParam {
        field: &'static str,
        reason: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PiParams {
    pub kp: f64,
    pub ki: f64,
    /// Setpoint window length, ticks.
    pub window_m: usize,
    /// Setpoint spread that triggers an integral reset, m/s.
    pub reset_dv: f64,
    /// Full width of the integration dead band, m/s.
    pub deadband_de: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl Default for PiParams {
    fn default() -> Self {
        let (kp, ki) = default_gains(-1.0, 1.0, 10.0).expect("valid defaults");
        Self {
            kp,
            ki,
            window_m: 30,
            reset_dv: 3.0,
            deadband_de: 0.2,
            u_min: -1.0,
            u_max: 1.0,
        }
    }
}

impl PiParams {
    /// Gains from [`default_gains`] with the default window and dead band.
    pub fn with_default_gains(u_min: f64, u_max: f64, v_max: f64) -> Result<Self, ControlError> {
        let (kp, ki) = default_gains(u_min, u_max, v_max)?;
        Ok(Self {
            kp,
            ki,
            u_min,
            u_max,
            ..Self::default()
        })
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let bad = |field, reason| Err(ControlError::InvalidParam { field, reason });
        if !(self.kp.is_finite() && self.kp > 0.0) {
            return bad("kp", "must be positive");
        }
        if !(self.ki.is_finite() && self.ki >= 0.0) {
            return bad("ki", "must be non-negative");
        }
        if self.window_m < 1 {
            return bad("window_m", "must be at least 1");
        }
        if !(self.reset_dv.is_finite() && self.reset_dv > 0.0) {
            return bad("reset_dv", "must be positive");
        }
        if !(self.deadband_de.is_finite() && self.deadband_de >= 0.0) {
            return bad("deadband_de", "must be non-negative");
        }
        if !(self.u_min.is_finite() && self.u_max.is_finite() && self.u_min < self.u_max) {
            return bad("u_min", "must be below u_max");
        }
        Ok(())
    }
}

/// `kp = (u_max - u_min) / (2 v_max)`, `ki = kp / 2`.
pub fn default_gains(u_min: f64, u_max: f64, v_max: f64) -> Result<(f64, f64), ControlError> {
    if !(u_min.is_finite() && u_max.is_finite() && u_min < u_max) {
        return Err(ControlError::InvalidParam {
            field: "u_min",
            reason: "must be below u_max",
        });
    }
    if !(v_max.is_finite() && v_max > 0.0) {
        return Err(ControlError::InvalidParam {
            field: "v_max",
            reason: "must be positive",
        });
    }
    let kp = 0.5 * (u_max - u_min) / v_max;
    Ok((kp, 0.5 * kp))
}

/// sign with sign(0) = +1
#[inline]
fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Controller state; one instance per vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct PiController {
    params: PiParams,
    integral: f64,
    window: VecDeque<f64>,
}

impl PiController {
    pub fn new(params: PiParams) -> Result<Self, ControlError> {
        params.validate()?;
        Ok(Self {
            params,
            integral: 0.0,
            window: VecDeque::with_capacity(params.window_m),
        })
    }

    pub fn params(&self) -> &PiParams {
        &self.params
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn window(&self) -> &VecDeque<f64> {
        &self.window
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.window.clear();
    }

    /// One control step; returns the clamped throttle.
    pub fn update(&mut self, v_target: f64, v: f64, dt: f64) -> Result<f64, ControlError> {
        if !v_target.is_finite() {
            return Err(ControlError::NonFinite("v_target"));
        }
        if !v.is_finite() {
            return Err(ControlError::NonFinite("v"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(ControlError::InvalidTimestep(dt));
        }
        let p = &self.params;

        if self.window.len() == p.window_m {
            self.window.pop_front();
        }
        self.window.push_back(v_target);
        let (lo, hi) = self
            .window
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        let mut prev = self.integral;
        if sign(lo) != sign(hi) || hi - lo > p.reset_dv {
            self.window.clear();
            prev = 0.0;
        }

        let e = v_target - v;
        let mut integral = if e.abs() > 0.5 * p.deadband_de {
            prev + p.ki * e * dt
        } else {
            prev
        };

        let u = p.kp * e + integral;
        let clamped = u.clamp(p.u_min, p.u_max);
        if u != clamped && sign(e) == sign(u) {
            integral = prev;
        }
        self.integral = integral;
        Ok(clamped)
    }
}
