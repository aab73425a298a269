//! Polyline paths: arc-length queries, closest-point projection, corridor
//! membership and fixed-spacing resampling.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::geometry::Point3;

/// Consecutive waypoints closer than this are rejected.
pub const MIN_SEGMENT_LENGTH: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("a path needs at least 2 waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("waypoint {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("waypoints {0} and {} coincide", .0 + 1)]
    DuplicateWaypoint(usize),
    #[error("corridor half-width must be positive and finite, got {0}")]
    InvalidHalfWidth(f64),
}

/// Result of projecting a query point onto a [`Path`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the closest point, measured from the first waypoint.
    pub arclength_s: f64,
    pub closest_point: Point3,
    pub cross_track_error: f64,
    /// Index of the segment holding the closest point.
    pub segment: usize,
}

/// An immutable polyline with a safety corridor around it.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    waypoints: Vec<Point3>,
    cumulative: Vec<f64>,
    corridor_half_width: f64,
    fingerprint: u64,
}

impl Path {
    pub fn new(waypoints: Vec<Point3>, corridor_half_width: f64) -> Result<Self, PathError> {
        if waypoints.len() < 2 {
            return Err(PathError::TooFewWaypoints(waypoints.len()));
        }
        if !(corridor_half_width.is_finite() && corridor_half_width > 0.0) {
            return Err(PathError::InvalidHalfWidth(corridor_half_width));
        }
        if let Some(i) = waypoints.iter().position(|p| !p.is_finite()) {
            return Err(PathError::NonFinite(i));
        }
        let mut cumulative = Vec::with_capacity(waypoints.len());
        cumulative.push(0.0);
        let mut acc = 0.0;
        for (i, w) in waypoints.windows(2).enumerate() {
            let len = w[0].distance(w[1]);
            if len <= MIN_SEGMENT_LENGTH {
                return Err(PathError::DuplicateWaypoint(i));
            }
            acc += len;
            cumulative.push(acc);
        }

        let mut hasher = DefaultHasher::new();
        for p in &waypoints {
            p.x.to_bits().hash(&mut hasher);
            p.y.to_bits().hash(&mut hasher);
            p.z.to_bits().hash(&mut hasher);
        }
        corridor_half_width.to_bits().hash(&mut hasher);

        Ok(Self {
            waypoints,
            cumulative,
            corridor_half_width,
            fingerprint: hasher.finish(),
        })
    }

    pub fn waypoints(&self) -> &[Point3] {
        &self.waypoints
    }

    pub fn cumulative_arclength(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn corridor_half_width(&self) -> f64 {
        self.corridor_half_width
    }

    /// Content hash; two paths with equal waypoints and corridor share it.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn first(&self) -> Point3 {
        self.waypoints[0]
    }

    pub fn last(&self) -> Point3 {
        self.waypoints[self.waypoints.len() - 1]
    }

    pub fn segment_count(&self) -> usize {
        self.waypoints.len() - 1
    }

    pub fn total_arclength(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    /// Index of the segment containing arc length `s` (already clamped).
    fn segment_at(&self, s: f64) -> usize {
        // first cumulative value strictly greater than s, minus one
        let upper = self.cumulative.partition_point(|&c| c <= s);
        upper.saturating_sub(1).min(self.segment_count() - 1)
    }

    /// Linear interpolation along the polyline; `s` is clamped to `[0, total]`.
    pub fn point_at_arclength(&self, s: f64) -> Point3 {
        if s.is_nan() || s <= 0.0 {
            return self.first();
        }
        if s >= self.total_arclength() {
            return self.last();
        }
        let i = self.segment_at(s);
        let s0 = self.cumulative[i];
        let len = self.cumulative[i + 1] - s0;
        self.waypoints[i].lerp(self.waypoints[i + 1], (s - s0) / len)
    }

    /// Unit tangent of the segment at arc length `s`.
    pub fn tangent_at(&self, s: f64) -> Point3 {
        let s = s.clamp(0.0, self.total_arclength());
        let i = self.segment_at(s);
        let d = self.waypoints[i + 1] - self.waypoints[i];
        d / d.norm()
    }

    /// Closest point on the polyline. Ties go to the smaller arc length.
    pub fn project(&self, q: Point3) -> Projection {
        let mut best_d2 = f64::INFINITY;
        let mut best = (0usize, 0.0f64, self.first());
        for (i, w) in self.waypoints.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let ab = b - a;
            let len2 = ab.norm_squared();
            let t = ((q - a).dot(ab) / len2).clamp(0.0, 1.0);
            let c = a + ab * t;
            let d2 = (q - c).norm_squared();
            if d2 < best_d2 {
                best_d2 = d2;
                best = (i, t, c);
            }
        }
        let (i, t, c) = best;
        let s0 = self.cumulative[i];
        let s = s0 + t * (self.cumulative[i + 1] - s0);
        Projection {
            arclength_s: s,
            closest_point: c,
            cross_track_error: best_d2.sqrt(),
            segment: i,
        }
    }

    /// Boundary inclusive.
    pub fn inside_corridor(&self, q: Point3) -> bool {
        self.project(q).cross_track_error <= self.corridor_half_width
    }

    /// Points spaced `spacing` apart in arc length, starting from the projection
    /// of `start`. Element 0 is `start` itself; at most `count` points are
    /// returned, and the walk stops at the final waypoint.
    pub fn resample_from(&self, start: Point3, spacing: f64, count: usize) -> Vec<Point3> {
        let mut out = Vec::with_capacity(count.max(1));
        self.resample_into(start, spacing, count, &mut out);
        out
    }

    /// Same as [`Path::resample_from`] but reuses `out`.
    pub fn resample_into(&self, start: Point3, spacing: f64, count: usize, out: &mut Vec<Point3>) {
        out.clear();
        out.push(start);
        if count <= 1 || spacing.is_nan() || spacing <= 0.0 {
            return;
        }
        let total = self.total_arclength();
        let s_star = self.project(start).arclength_s;
        let mut last_s = s_star;
        for i in 1..count {
            let s = s_star + i as f64 * spacing;
            if s >= total {
                // truncated final element; skip it if it would nearly duplicate
                // the previous sample
                if total - last_s > MIN_SEGMENT_LENGTH {
                    out.push(self.last());
                }
                break;
            }
            out.push(self.point_at_arclength(s));
            last_s = s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point3 {
        Point3::planar(x, y)
    }

    fn l_path() -> Path {
        Path::new(vec![p(0.0, 0.0), p(3.0, 0.0), p(3.0, 4.0)], 3.0).unwrap()
    }

    #[test]
    fn total_arclength_examples() {
        // 3 m + 4 m legs
        assert_eq!(l_path().total_arclength(), 7.0);
        let unit = Path::new(vec![p(0.0, 0.0), p(1.0, 0.0)], 1.0).unwrap();
        assert_eq!(unit.total_arclength(), 1.0);
    }

    #[test]
    fn square_spiral_of_unit_segments() {
        // 100 unit steps turning left every few steps; lengths summed independently
        let dirs = [p(1.0, 0.0), p(0.0, 1.0), p(-1.0, 0.0), p(0.0, -1.0)];
        let mut pts = vec![Point3::ZERO];
        let (mut run, mut dir, mut left, mut turns) = (1usize, 0usize, 1usize, 0usize);
        for _ in 0..100 {
            let next = *pts.last().unwrap() + dirs[dir];
            pts.push(next);
            left -= 1;
            if left == 0 {
                dir = (dir + 1) % 4;
                turns += 1;
                if turns % 2 == 0 {
                    run += 1;
                }
                left = run;
            }
        }
        let expected: f64 = pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        let path = Path::new(pts, 1.0).unwrap();
        assert_eq!(expected, 100.0);
        assert!((path.total_arclength() - expected).abs() < 1e-12);
    }

    #[test]
    fn point_at_arclength_examples() {
        let straight = Path::new(vec![p(0.0, 0.0), p(4.0, 0.0)], 1.0).unwrap();
        assert_eq!(straight.point_at_arclength(1.0), p(1.0, 0.0));
        assert_eq!(straight.point_at_arclength(-5.0), p(0.0, 0.0));
        assert_eq!(straight.point_at_arclength(50.0), p(4.0, 0.0));
        assert_eq!(l_path().point_at_arclength(5.0), p(3.0, 2.0));
        assert_eq!(l_path().point_at_arclength(3.0), p(3.0, 0.0));
    }

    #[test]
    fn project_examples() {
        let straight = Path::new(vec![p(0.0, 0.0), p(4.0, 0.0)], 1.0).unwrap();
        let pr = straight.project(p(1.0, 1.0));
        assert_eq!(pr.arclength_s, 1.0);
        assert_eq!(pr.cross_track_error, 1.0);
        assert_eq!(pr.closest_point, p(1.0, 0.0));

        let on = l_path().project(p(3.0, 1.5));
        assert_eq!(on.cross_track_error, 0.0);
        assert_eq!(on.arclength_s, 4.5);
    }

    #[test]
    fn project_tie_breaks_to_smaller_arclength() {
        // path (0,0)-(4,0)-(4,4); q=(3,1) is exactly 1 m from both legs
        let path = Path::new(vec![p(0.0, 0.0), p(4.0, 0.0), p(4.0, 4.0)], 1.0).unwrap();
        let q = p(3.0, 1.0);

        // brute force over 1e5 samples: both legs reach distance 1
        let total = path.total_arclength();
        let n = 100_000;
        let (mut best_first, mut best_second) = (f64::INFINITY, f64::INFINITY);
        for k in 0..=n {
            let s = total * k as f64 / n as f64;
            let d = path.point_at_arclength(s).distance(q);
            if s <= 4.0 {
                best_first = best_first.min(d);
            } else {
                best_second = best_second.min(d);
            }
        }
        assert!((best_first - 1.0).abs() < 1e-9);
        assert!((best_second - 1.0).abs() < 1e-4);

        let pr = path.project(q);
        assert_eq!(pr.cross_track_error, 1.0);
        assert_eq!(pr.arclength_s, 3.0);
    }

    #[test]
    fn corridor_membership() {
        let path = Path::new(vec![p(0.0, 0.0), p(10.0, 0.0)], 4.0).unwrap();
        assert!(path.inside_corridor(p(5.0, 0.0)));
        assert!(path.inside_corridor(p(5.0, 4.0)));
        assert!(path.inside_corridor(p(5.0, -4.0)));
        assert!(!path.inside_corridor(p(5.0, 5.0)));
    }

    #[test]
    fn resample_straight_paper_parameters() {
        let path = Path::new(vec![p(0.0, 0.0), p(30.0, 0.0)], 3.0).unwrap();
        let pts = path.resample_from(p(0.0, 0.0), 6.0, 5);
        let xs: Vec<f64> = pts.iter().map(|q| q.x).collect();
        assert_eq!(xs, vec![0.0, 6.0, 12.0, 18.0, 24.0]);
        assert!(pts.iter().all(|q| q.y == 0.0));
    }

    #[test]
    fn resample_at_path_end_has_only_start() {
        let path = Path::new(vec![p(0.0, 0.0), p(30.0, 0.0)], 3.0).unwrap();
        let pts = path.resample_from(p(30.0, 0.0), 6.0, 5);
        assert_eq!(pts, vec![p(30.0, 0.0)]);
    }

    #[test]
    fn resample_off_path_start() {
        let path = Path::new(vec![p(0.0, 0.0), p(30.0, 0.0)], 3.0).unwrap();
        let pts = path.resample_from(p(0.0, 3.0), 6.0, 5);
        assert_eq!(pts[0], p(0.0, 3.0));
        assert_eq!(pts[1], p(6.0, 0.0));
        assert_eq!(pts[4], p(24.0, 0.0));
    }

    #[test]
    fn resample_truncates_at_end() {
        let path = Path::new(vec![p(0.0, 0.0), p(20.0, 0.0)], 3.0).unwrap();
        let pts = path.resample_from(p(0.0, 0.0), 6.0, 5);
        let xs: Vec<f64> = pts.iter().map(|q| q.x).collect();
        assert_eq!(xs, vec![0.0, 6.0, 12.0, 18.0, 20.0]);
        let pts = path.resample_from(p(0.0, 0.0), 5.0, 8);
        let xs: Vec<f64> = pts.iter().map(|q| q.x).collect();
        assert_eq!(xs, vec![0.0, 5.0, 10.0, 15.0, 20.0]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            Path::new(vec![p(0.0, 0.0)], 1.0).unwrap_err(),
            PathError::TooFewWaypoints(1)
        );
        assert_eq!(
            Path::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 0.0)], 1.0).unwrap_err(),
            PathError::DuplicateWaypoint(1)
        );
        assert_eq!(
            Path::new(vec![p(0.0, 0.0), p(f64::NAN, 0.0)], 1.0).unwrap_err(),
            PathError::NonFinite(1)
        );
        assert!(matches!(
            Path::new(vec![p(0.0, 0.0), p(1.0, 0.0)], 0.0),
            Err(PathError::InvalidHalfWidth(_))
        ));
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = l_path();
        let b = l_path();
        let c = Path::new(vec![p(0.0, 0.0), p(3.0, 0.0), p(3.0, 5.0)], 3.0).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
