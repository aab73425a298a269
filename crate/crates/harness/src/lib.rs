//! Scenario loading, closed-loop runs and benchmark suites for the path
//! follower.

pub mod generate;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod suite;

pub use report::ScenarioReport;
pub use runner::{run_scenario, RunOptions, RunOutcome, SpawnJitter};
pub use scenario::{load_scenario, parse_scenario, ResolvedScenario, Scenario, ScenarioError};
pub use suite::{run_suite, SuiteOptions, SuiteReport};
