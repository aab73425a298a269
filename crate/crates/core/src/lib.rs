//! Path following for ground vehicles.
//!
//! The per-tick pipeline ([`follower::Follower::tick`]) chains:
//!
//! 1. [`target_speed`]: curvature-limited speed from quadratic Bézier windows
//!    over the path ahead ([`bezier`]),
//! 2. [`speed_control`]: PI throttle with integral reset, dead band and
//!    conditional integration,
//! 3. [`steering`]: pure pursuit with speed-scaled, corridor-gated lookahead,
//! 4. [`stuck`]: progress monitoring and recovery overrides.
//!
//! [`sim`] provides deterministic kinematic plants for closed-loop testing.

pub mod bezier;
pub mod follower;
pub mod geometry;
pub mod path;
pub mod sim;
pub mod speed_control;
pub mod steering;
pub mod stuck;
pub mod target_speed;

pub use bezier::{CurvatureAnalysis, CurvatureCase, QuadBezier};
pub use follower::{ControllerVariant, Follower, FollowerConfig, TickOutput, TickTelemetry};
pub use geometry::Point3;
pub use path::{Path, PathError, Projection};
pub use sim::{ControlCommand, Environment, VehicleKind, VehicleModelParams, VehicleState};
pub use speed_control::{PiController, PiParams};
pub use steering::PurePursuitParams;
pub use stuck::{StuckManager, StuckMode, StuckParams};
pub use target_speed::{TargetSpeedOutput, TargetSpeedParams};
