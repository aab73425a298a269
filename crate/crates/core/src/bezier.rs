//! Quadratic Bézier curves and their maximum curvature.
//!
//! The closed form splits on where the middle control point `p2` sits relative
//! to two spheres of radius `r = |p1 - m| / 2` centred at `(p1 + m) / 2` and
//! `(p3 + m) / 2`, with `m` the midpoint of `p1 p3`:
//!
//! * `p2` strictly outside both spheres: the curvature peaks inside the curve
//!   at `|p2 - m|^3 / A^2`, `A` being the area of the control triangle.
//! * otherwise the curvature is monotone along the curve and the peak is the
//!   larger endpoint value `A / |p1 - p2|^3` or `A / |p3 - p2|^3`.
//!
//! The sphere test is Thales' theorem for the angle `p1 p2 m` (resp.
//! `p3 p2 m`): outside the sphere means the parabola's vertex parameter lies
//! in `(0, 1)`.

use std::cell::Cell;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point3;

/// Below this speed along the curve the curvature formula is ill-conditioned.
pub const EPS_VELOCITY: f64 = 1e-9;
/// Control triangles smaller than this are treated as collinear.
pub const EPS_AREA: f64 = 1e-9;
/// Endpoints closer than this are treated as coincident.
pub const EPS_ENDPOINTS: f64 = 1e-6;
/// Curvature reported for cusps and other degenerate curves, 1/m.
pub const DEFAULT_KAPPA_CAP: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BezierError {
    #[error("curve parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("control point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("sampled maximum needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
}

thread_local! {
    static CLOSED_FORM_EVALS: Cell<u64> = const { Cell::new(0) };
    static CURVE_SAMPLES: Cell<u64> = const { Cell::new(0) };
}

/// Per-thread counters of curvature work, used to check the per-tick cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CurvatureCounters {
    /// Calls to [`QuadBezier::max_curvature`].
    pub closed_form: u64,
    /// Pointwise evaluations ([`QuadBezier::eval`], [`QuadBezier::curvature_at`]).
    pub samples: u64,
}

impl CurvatureCounters {
    pub fn read() -> Self {
        Self {
            closed_form: CLOSED_FORM_EVALS.with(Cell::get),
            samples: CURVE_SAMPLES.with(Cell::get),
        }
    }

    pub fn reset() {
        CLOSED_FORM_EVALS.with(|c| c.set(0));
        CURVE_SAMPLES.with(|c| c.set(0));
    }
}

#[inline]
fn bump(counter: &'static std::thread::LocalKey<Cell<u64>>) {
    counter.with(|c| c.set(c.get() + 1));
}

/// Which regime produced [`CurvatureAnalysis::kappa_max`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurvatureCase {
    /// `p2` outside both spheres; peak at the parabola vertex.
    InteriorMax,
    /// `p2` inside (or on) a sphere; peak at an endpoint.
    EndpointMonotone,
    /// Collinear control points with `p2` between the endpoints.
    DegenerateLine,
    /// Collinear with `p2` outside the segment, or coincident endpoints.
    DegenerateCusp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureAnalysis {
    pub kappa_max: f64,
    pub case: CurvatureCase,
    pub midpoint_m: Point3,
    pub sphere_radius: f64,
    pub triangle_area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadBezier {
    pub p1: Point3,
    pub p2: Point3,
    pub p3: Point3,
}

impl QuadBezier {
    pub fn new(p1: Point3, p2: Point3, p3: Point3) -> Result<Self, BezierError> {
        for (i, p) in [p1, p2, p3].iter().enumerate() {
            if !p.is_finite() {
                return Err(BezierError::NonFinite(i + 1));
            }
        }
        Ok(Self { p1, p2, p3 })
    }

    fn check_t(t: f64) -> Result<(), BezierError> {
        if (0.0..=1.0).contains(&t) {
            Ok(())
        } else {
            Err(BezierError::ParameterOutOfRange(t))
        }
    }

    pub fn eval(&self, t: f64) -> Result<Point3, BezierError> {
        Self::check_t(t)?;
        bump(&CURVE_SAMPLES);
        let u = 1.0 - t;
        Ok(self.p1 * (u * u) + self.p2 * (2.0 * u * t) + self.p3 * (t * t))
    }

    fn first_derivative(&self, t: f64) -> Point3 {
        (self.p2 - self.p1) * (2.0 * (1.0 - t)) + (self.p3 - self.p2) * (2.0 * t)
    }

    fn second_derivative(&self) -> Point3 {
        (self.p3 - self.p2 * 2.0 + self.p1) * 2.0
    }

    /// `|B' x B''| / |B'|^3`, or [`DEFAULT_KAPPA_CAP`] where `B'` vanishes.
    pub fn curvature_at(&self, t: f64) -> Result<f64, BezierError> {
        self.curvature_at_capped(t, DEFAULT_KAPPA_CAP)
    }

    pub fn curvature_at_capped(&self, t: f64, kappa_cap: f64) -> Result<f64, BezierError> {
        Self::check_t(t)?;
        Ok(self.curvature_unchecked(t, kappa_cap))
    }

    fn curvature_unchecked(&self, t: f64, kappa_cap: f64) -> f64 {
        bump(&CURVE_SAMPLES);
        let d1 = self.first_derivative(t);
        let speed = d1.norm();
        if speed < EPS_VELOCITY {
            return kappa_cap;
        }
        d1.cross(self.second_derivative()).norm() / (speed * speed * speed)
    }

    /// Area of the control triangle, `|(p1 - p2) x (p1 - p3)| / 2`.
    pub fn triangle_area(&self) -> f64 {
        0.5 * (self.p1 - self.p2).cross(self.p1 - self.p3).norm()
    }

    /// Closed-form maximum curvature with the default cusp cap.
    pub fn max_curvature(&self) -> CurvatureAnalysis {
        self.max_curvature_capped(DEFAULT_KAPPA_CAP)
    }

    pub fn max_curvature_capped(&self, kappa_cap: f64) -> CurvatureAnalysis {
        bump(&CLOSED_FORM_EVALS);
        let QuadBezier { p1, p2, p3 } = *self;
        let m = p1.midpoint(p3);
        let r = 0.5 * p1.distance(m);
        let area = self.triangle_area();
        let analysis = |kappa_max, case| CurvatureAnalysis {
            kappa_max,
            case,
            midpoint_m: m,
            sphere_radius: r,
            triangle_area: area,
        };

        let chord = p3 - p1;
        let chord_len2 = chord.norm_squared();
        if chord_len2.sqrt() < EPS_ENDPOINTS {
            return analysis(kappa_cap, CurvatureCase::DegenerateCusp);
        }
        if area < EPS_AREA {
            let u = (p2 - p1).dot(chord) / chord_len2;
            return if (0.0..=1.0).contains(&u) {
                analysis(0.0, CurvatureCase::DegenerateLine)
            } else {
                analysis(kappa_cap, CurvatureCase::DegenerateCusp)
            };
        }

        let outside_first = p2.distance(p1.midpoint(m)) > r;
        let outside_second = p2.distance(p3.midpoint(m)) > r;
        if outside_first && outside_second {
            let d = p2.distance(m);
            analysis(d * d * d / (area * area), CurvatureCase::InteriorMax)
        } else {
            let l1 = p1.distance(p2);
            let l2 = p3.distance(p2);
            let k1 = area / (l1 * l1 * l1);
            let k2 = area / (l2 * l2 * l2);
            analysis(k1.max(k2), CurvatureCase::EndpointMonotone)
        }
    }

    /// Dense-sampling estimate of the maximum curvature (slow; for checking
    /// the closed form).
    pub fn max_curvature_sampled(&self, samples: usize) -> Result<f64, BezierError> {
        self.sampled_argmax(samples).map(|(k, _)| k)
    }

    /// `(kappa_max, t_argmax)` from an even grid refined by ternary search
    /// around the best grid point.
    pub fn sampled_argmax(&self, samples: usize) -> Result<(f64, f64), BezierError> {
        if samples < 3 {
            return Err(BezierError::TooFewSamples(samples));
        }
        let cap = f64::INFINITY;
        let n = samples - 1;
        let t_of = |i: usize| i as f64 / n as f64;
        let (mut best_i, mut best_k) = (0usize, f64::NEG_INFINITY);
        for i in 0..=n {
            let k = self.curvature_unchecked(t_of(i), cap);
            if k > best_k {
                best_k = k;
                best_i = i;
            }
        }
        // curvature of a parabola arc is unimodal, so refine on the bracket
        let mut lo = t_of(best_i.saturating_sub(1));
        let mut hi = t_of((best_i + 1).min(n));
        while hi - lo > 1e-12 {
            let a = lo + (hi - lo) / 3.0;
            let b = hi - (hi - lo) / 3.0;
            if self.curvature_unchecked(a, cap) < self.curvature_unchecked(b, cap) {
                lo = a;
            } else {
                hi = b;
            }
        }
        let t_mid = 0.5 * (lo + hi);
        let k_mid = self.curvature_unchecked(t_mid, cap);
        if k_mid > best_k {
            Ok((k_mid, t_mid))
        } else {
            Ok((best_k, t_of(best_i)))
        }
    }
}
