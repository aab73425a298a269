//! Scenario files: TOML documents describing a path, a vehicle, controller
//! overrides and the environment.

use std::fmt;
use std::path::Path as FsPath;

use pathfollow_core::sim::{Environment, VehicleKind, VehicleModelParams};
use pathfollow_core::{ControllerVariant, FollowerConfig, Path};
use serde::{Deserialize, Serialize};

use crate::generate;

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

/// Parse or validation failure, carrying the dotted field path when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    pub field: Option<String>,
    pub message: String,
}

impl ScenarioError {
    pub(crate) fn at(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: Some(field.into()),
            message: message.into(),
        }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "at `{field}`: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ScenarioError {}

fn default_half_width() -> f64 {
    3.0
}

fn default_goal_radius() -> f64 {
    2.0
}

fn default_time_limit() -> f64 {
    120.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format_version: u32,
    pub name: String,
    #[serde(default = "default_half_width")]
    pub corridor_half_width: f64,
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default = "default_goal_radius")]
    pub goal_radius: f64,
    /// A [`PathSpec`] with its variant in the `kind` key.
    pub path: toml::Table,
    #[serde(default)]
    pub vehicle: VehicleSpec,
    /// Partial follower configuration layered over the vehicle-matched defaults.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub follower: Option<toml::Table>,
    #[serde(default)]
    pub env: Environment,
}

/// Explicit waypoints or a named generator. Generated paths start at the
/// origin heading along +x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    /// `[x, y]` or `[x, y, z]` per point.
    Waypoints {
        points: Vec<Vec<f64>>,
    },
    Straight {
        length: f64,
    },
    /// Left-turning arc.
    Circle {
        radius: f64,
        #[serde(default = "default_arc_deg")]
        arc_deg: f64,
    },
    SCurve {
        #[serde(default = "default_s_length")]
        length: f64,
        #[serde(default = "default_s_amplitude")]
        amplitude: f64,
        #[serde(default = "default_s_wavelength")]
        wavelength: f64,
    },
    /// Straight, 180 degree left turn, straight back.
    Hairpin {
        #[serde(default = "default_hairpin_radius")]
        radius: f64,
        #[serde(default = "default_hairpin_leg")]
        leg: f64,
    },
    /// Catmull-Rom spline through a seeded random walk.
    RandomSpline {
        seed: u64,
        #[serde(default = "default_spline_points")]
        control_points: usize,
        #[serde(default = "default_spline_step")]
        step: f64,
        #[serde(default = "default_spline_turn")]
        max_turn_deg: f64,
    },
}

impl PathSpec {
    /// Flat table form, `kind` plus the variant's fields.
    pub fn to_table(&self) -> toml::Table {
        let value = toml::Value::try_from(self).expect("path spec serializes");
        let (kind, fields) = value
            .as_table()
            .and_then(|t| t.iter().next())
            .expect("externally tagged");
        let mut out = toml::Table::new();
        out.insert("kind".into(), kind.clone().into());
        if let Some(f) = fields.as_table() {
            out.extend(f.clone());
        }
        out
    }

    pub fn from_table(table: &toml::Table) -> Result<Self, ScenarioError> {
        let mut fields = table.clone();
        let kind = match fields.remove("kind") {
            Some(toml::Value::String(k)) => k,
            Some(_) => return Err(ScenarioError::at("path.kind", "expected a string")),
            None => return Err(ScenarioError::at("path.kind", "missing generator kind")),
        };
        let mut tagged = toml::Table::new();
        tagged.insert(kind, fields.into());
        serde_path_to_error::deserialize(toml::Value::Table(tagged)).map_err(|e| {
            // drop the variant segment from the reported path
            let path = e.path().to_string();
            let field = match path.split_once('.') {
                _ if path == "." => "path.kind".to_string(),
                Some((_, rest)) => format!("path.{rest}"),
                None => "path".to_string(),
            };
            ScenarioError::at(field, e.into_inner().to_string())
        })
    }
}

fn default_arc_deg() -> f64 {
    180.0
}
fn default_s_length() -> f64 {
    150.0
}
fn default_s_amplitude() -> f64 {
    12.0
}
fn default_s_wavelength() -> f64 {
    75.0
}
fn default_hairpin_radius() -> f64 {
    8.0
}
fn default_hairpin_leg() -> f64 {
    40.0
}
fn default_spline_points() -> usize {
    8
}
fn default_spline_step() -> f64 {
    25.0
}
fn default_spline_turn() -> f64 {
    70.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Agile,
    Tracked,
    LowTraction,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Agile, Preset::Tracked, Preset::LowTraction];

    pub fn params(self) -> VehicleModelParams {
        match self {
            Preset::Agile => VehicleModelParams::agile(),
            Preset::Tracked => VehicleModelParams::tracked(),
            Preset::LowTraction => VehicleModelParams::low_traction(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Agile => "agile",
            Preset::Tracked => "tracked",
            Preset::LowTraction => "low_traction",
        }
    }
}

/// A preset with optional per-field overrides.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleSpec {
    pub preset: Preset,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<VehicleKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wheelbase: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steer_angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steer_rate_limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accel_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drag: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_yaw_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traction_factor: Option<f64>,
}

impl VehicleSpec {
    pub fn preset(preset: Preset) -> Self {
        Self {
            preset,
            ..Self::default()
        }
    }

    pub fn resolve(&self) -> VehicleModelParams {
        let mut p = self.preset.params();
        if let Some(k) = self.kind {
            p.kind = k;
        }
        let fields = [
            (self.wheelbase, &mut p.wheelbase),
            (self.max_steer_angle, &mut p.max_steer_angle),
            (self.steer_rate_limit, &mut p.steer_rate_limit),
            (self.accel_gain, &mut p.accel_gain),
            (self.drag, &mut p.drag),
            (self.max_yaw_rate, &mut p.max_yaw_rate),
            (self.traction_factor, &mut p.traction_factor),
        ];
        for (value, slot) in fields {
            if let Some(v) = value {
                *slot = v;
            }
        }
        p
    }
}

/// Everything a run needs, validated.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub name: String,
    pub path: Path,
    pub vehicle: VehicleModelParams,
    pub follower: FollowerConfig,
    pub env: Environment,
    pub time_limit: f64,
    pub goal_radius: f64,
}

impl ResolvedScenario {
    pub fn with_variant(&self, variant: ControllerVariant) -> Self {
        let mut out = self.clone();
        out.follower.variant = variant;
        out
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.message().to_string();
        if path == "." || path.is_empty() {
            ScenarioError {
                field: None,
                message: inner.to_string().trim().to_string(),
            }
        } else {
            ScenarioError::at(path, message)
        }
    })
}

pub fn load_scenario(file: &FsPath) -> Result<ResolvedScenario, ScenarioError> {
    let text = std::fs::read_to_string(file).map_err(|e| ScenarioError {
        field: None,
        message: format!("cannot read {}: {e}", file.display()),
    })?;
    parse_scenario(&text)?.resolve()
}

fn positive(field: &str, x: f64) -> Result<(), ScenarioError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(ScenarioError::at(
            field,
            format!("must be positive, got {x}"),
        ))
    }
}

impl Scenario {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn resolve(&self) -> Result<ResolvedScenario, ScenarioError> {
        if self.format_version != SCENARIO_FORMAT_VERSION {
            return Err(ScenarioError::at(
                "format_version",
                format!(
                    "unsupported version {}, expected {SCENARIO_FORMAT_VERSION}",
                    self.format_version
                ),
            ));
        }
        if self.name.trim().is_empty() {
            return Err(ScenarioError::at("name", "must not be empty"));
        }
        positive("time_limit", self.time_limit)?;
        positive("goal_radius", self.goal_radius)?;
        positive("corridor_half_width", self.corridor_half_width)?;

        let waypoints = generate::waypoints(&PathSpec::from_table(&self.path)?)?;
        let path = Path::new(waypoints, self.corridor_half_width)
            .map_err(|e| ScenarioError::at("path", e.to_string()))?;

        let vehicle = self.vehicle.resolve();
        vehicle
            .validate()
            .map_err(|e| ScenarioError::at("vehicle", e.to_string()))?;

        let base = FollowerConfig::for_vehicle(&vehicle, ControllerVariant::Proposed);
        let follower = match &self.follower {
            None => base,
            Some(overrides) => {
                let mut merged = toml::Value::try_from(base).expect("config serializes");
                merge(&mut merged, &toml::Value::Table(overrides.clone()));
                serde_path_to_error::deserialize::<_, FollowerConfig>(merged).map_err(|e| {
                    ScenarioError::at(format!("follower.{}", e.path()), e.into_inner().to_string())
                })?
            }
        };
        follower
            .validate()
            .map_err(|e| ScenarioError::at("follower", e.to_string()))?;

        for (i, w) in self.env.walls.iter().enumerate() {
            if !w.a.iter().chain(&w.b).all(|x| x.is_finite()) {
                return Err(ScenarioError::at(
                    format!("env.walls[{i}]"),
                    "non-finite coordinate",
                ));
            }
        }
        for (i, s) in self.env.slopes.iter().enumerate() {
            positive(&format!("env.slopes[{i}].radius"), s.radius)?;
            if !(s.decel.is_finite() && s.decel >= 0.0) {
                return Err(ScenarioError::at(
                    format!("env.slopes[{i}].decel"),
                    "must be non-negative",
                ));
            }
        }

        Ok(ResolvedScenario {
            name: self.name.clone(),
            path,
            vehicle,
            follower,
            env: self.env.clone(),
            time_limit: self.time_limit,
            goal_radius: self.goal_radius,
        })
    }
}

fn merge(base: &mut toml::Value, over: &toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
format_version = 1
name = "line"

[path]
kind = "straight"
length = 100.0
"#;

    #[test]
    fn minimal_scenario_resolves_with_defaults() {
        let s = parse_scenario(MINIMAL).unwrap().resolve().unwrap();
        assert_eq!(s.path.total_arclength(), 100.0);
        assert_eq!(s.vehicle, VehicleModelParams::agile());
        assert_eq!(s.follower.pursuit.wheelbase, 2.5);
        assert_eq!(s.goal_radius, 2.0);
        assert_eq!(s.path.corridor_half_width(), 3.0);
    }

    #[test]
    fn bad_field_reports_its_path() {
        let text = MINIMAL.replace("length = 100.0", "length = \"far\"");
        let err = parse_scenario(&text).unwrap().resolve().unwrap_err();
        assert_eq!(err.field.as_deref(), Some("path.length"));

        let text = MINIMAL.replace("straight", "spiral");
        let err = parse_scenario(&text).unwrap().resolve().unwrap_err();
        assert_eq!(err.field.as_deref(), Some("path.kind"));

        let text = MINIMAL.replace("length = 100.0", "length = 100.0\nwidth = 2.0");
        let err = parse_scenario(&text).unwrap().resolve().unwrap_err();
        assert_eq!(err.field.as_deref(), Some("path.width"));
        assert!(err.message.contains("width"), "{}", err.message);

        let text = format!("{MINIMAL}\n[vehicle]\nwheelbase = -1.0\n");
        let err = parse_scenario(&text).unwrap().resolve().unwrap_err();
        assert_eq!(err.field.as_deref(), Some("vehicle"));

        let text = format!("{MINIMAL}\n[follower.pi]\nkp = \"x\"\n");
        let err = parse_scenario(&text).unwrap().resolve().unwrap_err();
        assert_eq!(err.field.as_deref(), Some("follower.pi.kp"));

        let text = format!("{MINIMAL}\n[env]\nrocks = 3\n");
        let err = parse_scenario(&text).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("env.rocks"));
        assert!(err.message.contains("rocks"), "{}", err.message);
    }

    #[test]
    fn follower_overrides_layer_over_vehicle_defaults() {
        let text = format!("{MINIMAL}\n[vehicle]\npreset = \"tracked\"\n\n[follower]\nvariant = \"baseline\"\n\n[follower.pi]\nkp = 0.3\n");
        let s = parse_scenario(&text).unwrap().resolve().unwrap();
        assert_eq!(s.follower.variant, ControllerVariant::Baseline);
        assert_eq!(s.follower.pi.kp, 0.3);
        assert_eq!(s.follower.pi.ki, 0.05);
        assert_eq!(s.follower.pursuit.wheelbase, 3.5);
    }

    #[test]
    fn version_is_checked() {
        let text = MINIMAL.replace("format_version = 1", "format_version = 7");
        let err = parse_scenario(&text).unwrap().resolve().unwrap_err();
        assert_eq!(err.field.as_deref(), Some("format_version"));
    }

    #[test]
    fn round_trips_through_toml() {
        let s = parse_scenario(MINIMAL).unwrap();
        let again = parse_scenario(&s.to_toml()).unwrap();
        assert_eq!(s, again);
    }
}
