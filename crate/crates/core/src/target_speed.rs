//! Curvature-limited target speed.
//!
//! The path ahead of the vehicle is resampled into `count_n` points spaced
//! `spacing_dh` apart (the first point being the vehicle itself), every run of
//! three consecutive points is treated as a quadratic Bézier, and the largest
//! closed-form maximum curvature among them sets the speed through
//! `v = sqrt(a_lat * g / kappa)`, clamped to `[v_min, v_max]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bezier::{QuadBezier, DEFAULT_KAPPA_CAP};
use crate::geometry::Point3;
use crate::path::Path;

/// Curvatures below this are treated as straight road.
pub const EPS_KAPPA: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TargetSpeedError {
    #[error("curvature must be non-negative, got {0}")]
    NegativeCurvature(f64),
    #[error("invalid target speed parameter `{field}`: {reason}")]
    InvalidParam {
        field: &'static str,
        reason: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSpeedParams {
    /// Lateral acceleration budget as a multiple of `g`.
    pub a_lat: f64,
    /// m/s^2
    pub g: f64,
    /// Arc-length spacing of the lookahead samples, m.
    pub spacing_dh: f64,
    /// Number of lookahead samples including the vehicle position.
    pub count_n: usize,
    pub v_min: f64,
    pub v_max: f64,
    /// Curvature assigned to degenerate (cusp) windows, 1/m.
    pub kappa_cap: f64,
}

impl Default for TargetSpeedParams {
    fn default() -> Self {
        Self {
            a_lat: 0.4,
            g: 9.81,
            spacing_dh: 6.0,
            count_n: 5,
            v_min: 1.0,
            v_max: 10.0,
            kappa_cap: DEFAULT_KAPPA_CAP,
        }
    }
}

impl TargetSpeedParams {
    pub fn validate(&self) -> Result<(), TargetSpeedError> {
        let bad = |field, reason| Err(TargetSpeedError::InvalidParam { field, reason });
        if !(self.a_lat.is_finite() && self.a_lat > 0.0) {
            return bad("a_lat", "must be positive");
        }
        if !(self.g.is_finite() && self.g > 0.0) {
            return bad("g", "must be positive");
        }
        if !(self.spacing_dh.is_finite() && self.spacing_dh > 0.0) {
            return bad("spacing_dh", "must be positive");
        }
        if self.count_n < 3 {
            return bad("count_n", "must be at least 3");
        }
        if !(self.v_min.is_finite() && self.v_min > 0.0) {
            return bad("v_min", "must be positive");
        }
        if !(self.v_max.is_finite() && self.v_max >= self.v_min) {
            return bad("v_max", "must be at least v_min");
        }
        if !(self.kappa_cap.is_finite() && self.kappa_cap > 0.0) {
            return bad("kappa_cap", "must be positive");
        }
        Ok(())
    }

    /// Distance covered by the lookahead samples, `spacing_dh * count_n`.
    pub fn lookahead_span(&self) -> f64 {
        self.spacing_dh * self.count_n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpeedOutput {
    pub v_target: f64,
    pub kappa_max_used: f64,
    pub lookahead_points: Vec<Point3>,
}

/// Unclamped critical speed; `+inf` for (near) zero curvature.
pub fn critical_speed(kappa: f64, params: &TargetSpeedParams) -> Result<f64, TargetSpeedError> {
    if kappa.is_nan() || kappa < 0.0 {
        return Err(TargetSpeedError::NegativeCurvature(kappa));
    }
    if kappa < EPS_KAPPA {
        return Ok(f64::INFINITY);
    }
    Ok((params.a_lat * params.g / kappa).sqrt())
}

/// Largest closed-form curvature over all consecutive triples of `points`;
/// zero when there are fewer than three points.
pub fn max_window_curvature(points: &[Point3], kappa_cap: f64) -> f64 {
    points
        .windows(3)
        .map(|w| {
            QuadBezier {
                p1: w[0],
                p2: w[1],
                p3: w[2],
            }
            .max_curvature_capped(kappa_cap)
            .kappa_max
        })
        .fold(0.0, f64::max)
}

pub fn compute_target_speed(
    position: Point3,
    path: &Path,
    params: &TargetSpeedParams,
) -> TargetSpeedOutput {
    let mut points = Vec::with_capacity(params.count_n);
    let (v_target, kappa) = compute_target_speed_into(position, path, params, &mut points);
    TargetSpeedOutput {
        v_target,
        kappa_max_used: kappa,
        lookahead_points: points,
    }
}

/// Allocation-free variant: fills `scratch` with the lookahead samples and
/// returns `(v_target, kappa_max)`.
pub fn compute_target_speed_into(
    position: Point3,
    path: &Path,
    params: &TargetSpeedParams,
    scratch: &mut Vec<Point3>,
) -> (f64, f64) {
    path.resample_into(position, params.spacing_dh, params.count_n, scratch);
    let kappa = max_window_curvature(scratch, params.kappa_cap);
    // kappa >= 0 by construction
    let v = critical_speed(kappa, params).unwrap_or(f64::INFINITY);
    (v.clamp(params.v_min, params.v_max), kappa)
}
