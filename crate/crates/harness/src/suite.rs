//! Batch runs over a scenario set with per-variant aggregation.

use std::path::Path as FsPath;

use anyhow::Context;
use pathfollow_core::ControllerVariant;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::report::{ScenarioReport, REPORT_FORMAT_VERSION};
use crate::runner::{run_scenario, RunOptions, SpawnJitter};
use crate::scenario::{load_scenario, ResolvedScenario};

/// Spawn jitter bounds: lateral meters, heading radians.
pub const JITTER_LATERAL: f64 = 0.5;
pub const JITTER_HEADING: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub variants: Vec<ControllerVariant>,
    pub trials: u32,
    pub seed: u64,
    pub tick_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; zero for fewer than two values.
    pub std: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self {
                mean: 0.0,
                std: 0.0,
            };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRun {
    pub trial: u32,
    #[serde(flatten)]
    pub report: ScenarioReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub completed: usize,
    pub stuck_events: u64,
    pub total_time: Stat,
    pub cte_mean: Stat,
    pub inside_corridor_pct: Stat,
    pub speed_mean: Stat,
}

impl Summary {
    fn of<'a>(reports: impl Iterator<Item = &'a ScenarioReport>) -> Self {
        let rs: Vec<_> = reports.collect();
        let col =
            |f: fn(&ScenarioReport) -> f64| Stat::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
        Self {
            runs: rs.len(),
            completed: rs.iter().filter(|r| r.completed).count(),
            stuck_events: rs.iter().map(|r| u64::from(r.stuck_events)).sum(),
            total_time: col(|r| r.total_time),
            cte_mean: col(|r| r.cte_mean),
            inside_corridor_pct: col(|r| r.inside_corridor_pct),
            speed_mean: col(|r| r.speed_mean),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: ControllerVariant,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBreakdown {
    pub scenario: String,
    pub variant: ControllerVariant,
    #[serde(flatten)]
    pub summary: Summary,
}

/// Proposed relative to Baseline, as `(1 - proposed / baseline) * 100`.
/// `None` when the baseline total is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub stuck_events_reduction_pct: Option<f64>,
    pub total_time_reduction_pct: Option<f64>,
}

pub fn reduction_pct(proposed: f64, baseline: f64) -> Option<f64> {
    (baseline != 0.0).then(|| (1.0 - proposed / baseline) * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub format_version: u32,
    pub seed: u64,
    pub trials: u32,
    pub tick_rate: f64,
    pub variants: Vec<VariantSummary>,
    pub comparison: Option<Comparison>,
    pub scenarios: Vec<ScenarioBreakdown>,
    pub runs: Vec<SuiteRun>,
}

impl SuiteReport {
    pub fn variant(&self, v: ControllerVariant) -> Option<&Summary> {
        self.variants
            .iter()
            .find(|s| s.variant == v)
            .map(|s| &s.summary)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Loads every `*.toml` file in `dir`, sorted by file name.
pub fn load_dir(dir: &FsPath) -> anyhow::Result<Vec<ResolvedScenario>> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read directory {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "toml"));
    files.sort();
    files
        .iter()
        .map(|f| load_scenario(f).with_context(|| format!("in scenario file {}", f.display())))
        .collect()
}

fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// Deterministic spawn jitter for one (seed, scenario, trial); shared by all
/// variants so they face the same start.
pub fn spawn_jitter(seed: u64, scenario: &str, trial: u32) -> SpawnJitter {
    let mut h = fnv1a(&seed.to_le_bytes(), 0xcbf2_9ce4_8422_2325);
    h = fnv1a(scenario.as_bytes(), h);
    h = fnv1a(&trial.to_le_bytes(), h);
    let mut rng = ChaCha8Rng::seed_from_u64(h);
    SpawnJitter {
        lateral: rng.gen_range(-JITTER_LATERAL..=JITTER_LATERAL),
        heading: rng.gen_range(-JITTER_HEADING..=JITTER_HEADING),
    }
}

pub fn run_suite(
    scenarios: &[ResolvedScenario],
    opts: &SuiteOptions,
) -> anyhow::Result<SuiteReport> {
    anyhow::ensure!(!scenarios.is_empty(), "scenario set is empty");
    anyhow::ensure!(opts.trials > 0, "trial count must be at least 1");
    anyhow::ensure!(!opts.variants.is_empty(), "no controller variants selected");
    let mut variants = opts.variants.clone();
    variants.sort();
    variants.dedup();

    let jobs: Vec<_> = scenarios
        .iter()
        .flat_map(|s| {
            variants
                .iter()
                .flat_map(move |&v| (0..opts.trials).map(move |t| (s, v, t)))
        })
        .collect();
    let mut runs = jobs
        .par_iter()
        .map(|&(s, variant, trial)| {
            let run_opts = RunOptions {
                tick_rate: opts.tick_rate,
                variant: Some(variant),
                jitter: spawn_jitter(opts.seed, &s.name, trial),
                record_trace: false,
            };
            run_scenario(s, &run_opts)
                .map(|o| SuiteRun {
                    trial,
                    report: o.report,
                })
                .with_context(|| {
                    format!("scenario {} ({}, trial {trial})", s.name, variant.as_str())
                })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    runs.sort_by(|a, b| {
        (&a.report.scenario, a.report.variant, a.trial).cmp(&(
            &b.report.scenario,
            b.report.variant,
            b.trial,
        ))
    });

    let variant_summaries: Vec<_> = variants
        .iter()
        .map(|&v| VariantSummary {
            variant: v,
            summary: Summary::of(runs.iter().map(|r| &r.report).filter(|r| r.variant == v)),
        })
        .collect();

    let mut names: Vec<&str> = runs.iter().map(|r| r.report.scenario.as_str()).collect();
    names.dedup();
    let scenario_rows = names
        .iter()
        .flat_map(|&name| {
            let runs = &runs;
            variants.iter().map(move |&v| ScenarioBreakdown {
                scenario: name.to_string(),
                variant: v,
                summary: Summary::of(
                    runs.iter()
                        .map(|r| &r.report)
                        .filter(|r| r.scenario == name && r.variant == v),
                ),
            })
        })
        .collect();

    let find = |v| {
        variant_summaries
            .iter()
            .find(|s| s.variant == v)
            .map(|s| &s.summary)
    };
    let comparison = match (
        find(ControllerVariant::Proposed),
        find(ControllerVariant::Baseline),
    ) {
        (Some(p), Some(b)) => Some(Comparison {
            stuck_events_reduction_pct: reduction_pct(p.stuck_events as f64, b.stuck_events as f64),
            total_time_reduction_pct: reduction_pct(p.total_time.mean, b.total_time.mean),
        }),
        _ => None,
    };

    Ok(SuiteReport {
        format_version: REPORT_FORMAT_VERSION,
        seed: opts.seed,
        trials: opts.trials,
        tick_rate: opts.tick_rate,
        variants: variant_summaries,
        comparison,
        scenarios: scenario_rows,
        runs,
    })
}
