//! Path generators and the standard ten-path benchmark set.

use std::f64::consts::PI;

use pathfollow_core::sim::{Environment, SlopeRegion, Wall};
use pathfollow_core::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::{
    PathSpec, Preset, Scenario, ScenarioError, VehicleSpec, SCENARIO_FORMAT_VERSION,
};

/// Spacing of generated curve samples, meters.
const SAMPLE_STEP: f64 = 2.0;

fn check(field: &str, ok: bool, what: &str) -> Result<(), ScenarioError> {
    if ok {
        Ok(())
    } else {
        Err(ScenarioError::at(format!("path.{field}"), what))
    }
}

fn finite_pos(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

pub fn waypoints(spec: &PathSpec) -> Result<Vec<Point3>, ScenarioError> {
    match *spec {
        PathSpec::Waypoints { ref points } => points
            .iter()
            .enumerate()
            .map(|(i, p)| match p.as_slice() {
                [x, y] => Ok(Point3::planar(*x, *y)),
                [x, y, z] => Ok(Point3::new(*x, *y, *z)),
                _ => Err(ScenarioError::at(
                    format!("path.points[{i}]"),
                    "expected [x, y] or [x, y, z]",
                )),
            })
            .collect(),
        PathSpec::Straight { length } => {
            check("length", finite_pos(length), "must be positive")?;
            Ok(vec![Point3::ZERO, Point3::planar(length, 0.0)])
        }
        PathSpec::Circle { radius, arc_deg } => {
            check("radius", finite_pos(radius), "must be positive")?;
            check(
                "arc_deg",
                arc_deg.is_finite() && arc_deg > 0.0 && arc_deg < 360.0,
                "must be in (0, 360)",
            )?;
            Ok(arc(radius, arc_deg.to_radians()))
        }
        PathSpec::SCurve {
            length,
            amplitude,
            wavelength,
        } => {
            check("length", finite_pos(length), "must be positive")?;
            check("amplitude", amplitude.is_finite(), "must be finite")?;
            check("wavelength", finite_pos(wavelength), "must be positive")?;
            let n = (length / SAMPLE_STEP).ceil().max(1.0) as usize;
            let k = 2.0 * PI / wavelength;
            // weave with zero slope at the start
            Ok((0..=n)
                .map(|i| {
                    let x = length * i as f64 / n as f64;
                    Point3::planar(x, 0.5 * amplitude * (1.0 - (k * x).cos()))
                })
                .collect())
        }
        PathSpec::Hairpin { radius, leg } => {
            check("radius", finite_pos(radius), "must be positive")?;
            check("leg", finite_pos(leg), "must be positive")?;
            let mut pts = vec![Point3::ZERO];
            for p in arc(radius, PI) {
                pts.push(Point3::planar(leg + p.x, p.y));
            }
            pts.push(Point3::planar(0.0, 2.0 * radius));
            Ok(pts)
        }
        PathSpec::RandomSpline {
            seed,
            control_points,
            step,
            max_turn_deg,
        } => {
            check("control_points", control_points >= 3, "need at least 3")?;
            check("step", finite_pos(step), "must be positive")?;
            check(
                "max_turn_deg",
                max_turn_deg.is_finite() && (0.0..180.0).contains(&max_turn_deg),
                "must be in [0, 180)",
            )?;
            Ok(random_spline(
                seed,
                control_points,
                step,
                max_turn_deg.to_radians(),
            ))
        }
    }
}

/// Left arc from the origin heading +x, including the start point.
fn arc(radius: f64, sweep: f64) -> Vec<Point3> {
    let n = ((radius * sweep) / SAMPLE_STEP).ceil().max(2.0) as usize;
    (0..=n)
        .map(|i| {
            let phi = sweep * i as f64 / n as f64;
            Point3::planar(radius * phi.sin(), radius * (1.0 - phi.cos()))
        })
        .collect()
}

fn random_spline(seed: u64, count: usize, step: f64, max_turn: f64) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctrl = vec![Point3::ZERO];
    let mut heading = 0.0f64;
    for i in 1..count {
        if i > 1 {
            heading += rng.gen_range(-max_turn..=max_turn);
        }
        let len = step * rng.gen_range(0.7..1.3);
        let prev = ctrl[i - 1];
        ctrl.push(prev + Point3::from_heading(heading) * len);
    }
    // uniform Catmull-Rom with mirrored end tangents
    let first = ctrl[0] * 2.0 - ctrl[1];
    let last = ctrl[count - 1] * 2.0 - ctrl[count - 2];
    let mut ext = Vec::with_capacity(count + 2);
    ext.push(first);
    ext.extend_from_slice(&ctrl);
    ext.push(last);

    let mut out = vec![ctrl[0]];
    for w in ext.windows(4) {
        let [p0, p1, p2, p3] = [w[0], w[1], w[2], w[3]];
        let n = (p1.distance(p2) / SAMPLE_STEP).ceil().max(1.0) as usize;
        for j in 1..=n {
            let t = j as f64 / n as f64;
            let (t2, t3) = (t * t, t * t * t);
            let p = (p1 * 2.0
                + (p2 - p0) * t
                + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * t2
                + (p1 * 3.0 - p0 - p2 * 3.0 + p3) * t3)
                * 0.5;
            out.push(p);
        }
    }
    out
}

fn spec(name: &str, preset: Preset, path: PathSpec) -> Scenario {
    Scenario {
        format_version: SCENARIO_FORMAT_VERSION,
        name: format!("{name}-{}", preset.as_str()),
        corridor_half_width: 3.0,
        time_limit: 120.0,
        goal_radius: 2.0,
        path: path.to_table(),
        vehicle: VehicleSpec::preset(preset),
        follower: None,
        env: Environment::default(),
    }
}

fn pts(points: &[[f64; 2]]) -> PathSpec {
    PathSpec::Waypoints {
        points: points.iter().map(|p| p.to_vec()).collect(),
    }
}

/// The ten benchmark paths for one vehicle preset.
pub fn benchmark_paths(seed: u64, preset: Preset) -> Vec<Scenario> {
    let mut out = vec![
        spec("01-straight", preset, PathSpec::Straight { length: 150.0 }),
        spec(
            "02-gentle-arc",
            preset,
            PathSpec::Circle {
                radius: 40.0,
                arc_deg: 150.0,
            },
        ),
        spec(
            "03-s-curve",
            preset,
            PathSpec::SCurve {
                length: 150.0,
                amplitude: 12.0,
                wavelength: 75.0,
            },
        ),
        spec(
            "04-hairpin",
            preset,
            PathSpec::Hairpin {
                radius: 8.0,
                leg: 50.0,
            },
        ),
        spec(
            "05-sharp-zigzag",
            preset,
            pts(&[
                [0.0, 0.0],
                [40.0, 0.0],
                [55.0, 25.0],
                [75.0, -5.0],
                [95.0, 20.0],
                [130.0, 20.0],
            ]),
        ),
    ];

    // long climb with a corner near the top
    let mut hill = spec(
        "06-steep-hill",
        preset,
        pts(&[
            [0.0, 0.0],
            [40.0, 0.0],
            [80.0, 0.0],
            [80.0, 40.0],
            [110.0, 40.0],
        ]),
    );
    hill.env.slopes.push(SlopeRegion {
        center: [75.0, 5.0],
        radius: 22.0,
        decel: 2.2,
    });
    out.push(hill);

    let mut narrow = spec(
        "07-narrow-corridor",
        preset,
        PathSpec::SCurve {
            length: 120.0,
            amplitude: 6.0,
            wavelength: 60.0,
        },
    );
    narrow.corridor_half_width = 1.0;
    out.push(narrow);

    let mut wall = spec(
        "08-walled-corner",
        preset,
        pts(&[[0.0, 0.0], [50.0, 0.0], [50.0, 50.0]]),
    );
    // outside of the corner, where late turns run wide
    wall.env.walls.push(Wall {
        a: [51.2, 0.5],
        b: [51.2, 10.0],
    });
    out.push(wall);

    for k in 0..2u64 {
        out.push(spec(
            &format!("{:02}-random-spline", 9 + k),
            preset,
            PathSpec::RandomSpline {
                seed: seed.wrapping_mul(2).wrapping_add(k),
                control_points: 8,
                step: 25.0,
                max_turn_deg: 70.0,
            },
        ));
    }
    out
}

/// Ten paths crossed with the three vehicle presets.
pub fn benchmark_suite(seed: u64) -> Vec<Scenario> {
    Preset::ALL
        .into_iter()
        .flat_map(|p| benchmark_paths(seed, p))
        .collect()
}
