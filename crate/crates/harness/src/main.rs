use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use pathfollow_core::sim::DEFAULT_TICK_RATE;
use pathfollow_core::ControllerVariant;
use pathfollow_harness::generate::benchmark_suite;
use pathfollow_harness::report::write_trace;
use pathfollow_harness::suite::load_dir;
use pathfollow_harness::{load_scenario, run_scenario, run_suite, RunOptions, SuiteOptions};

/// Closed-loop path-following simulations and benchmarks.
#[derive(Debug, Parser)]
#[command(name = "pathfollow", version)]
struct Cli {
    /// Control and integration rate in Hz.
    #[arg(long, global = true, default_value_t = DEFAULT_TICK_RATE)]
    ticks_per_sec: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario file and print its report.
    Run {
        scenario: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a per-tick CSV trace.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Override the scenario's controller variant.
        #[arg(long)]
        variant: Option<ControllerVariant>,
    },
    /// Run every scenario in a directory for each variant and trial.
    Suite {
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "proposed,baseline")]
        variants: Vec<ControllerVariant>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: u32,
        /// Write the JSON suite report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the ten benchmark paths for each vehicle preset as scenario files.
    GenPaths {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn emit(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn real_main(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            trace,
            variant,
        } => {
            let scn = load_scenario(&scenario)
                .with_context(|| format!("in scenario file {}", scenario.display()))?;
            let opts = RunOptions {
                tick_rate: cli.ticks_per_sec,
                variant,
                record_trace: trace.is_some(),
                ..RunOptions::default()
            };
            let outcome = run_scenario(&scn, &opts)?;
            if let Some(p) = &trace {
                let f =
                    File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
                write_trace(BufWriter::new(f), &outcome.trace)?;
            }
            let mut json = serde_json::to_string_pretty(&outcome.report)?;
            json.push('\n');
            emit(out.as_ref(), &json)?;
            if outcome.report.completed {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!(
                    "scenario `{}` did not reach the goal within {} s",
                    scn.name, scn.time_limit
                );
                Ok(ExitCode::from(2))
            }
        }
        Command::Suite {
            dir,
            variants,
            seed,
            trials,
            out,
        } => {
            let scenarios = load_dir(&dir)?;
            let opts = SuiteOptions {
                variants,
                trials,
                seed,
                tick_rate: cli.ticks_per_sec,
            };
            let report = run_suite(&scenarios, &opts)?;
            emit(out.as_ref(), &report.to_json())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::GenPaths { out, seed } => {
            std::fs::create_dir_all(&out)
                .with_context(|| format!("cannot create {}", out.display()))?;
            for s in benchmark_suite(seed) {
                let file = out.join(format!("{}.toml", s.name));
                std::fs::write(&file, s.to_toml())
                    .with_context(|| format!("cannot write {}", file.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
