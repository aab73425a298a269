use std::path::Path;
use std::process::{Command, Output};

const STRAIGHT: &str = r#"
format_version = 1
name = "straight-100"
time_limit = 60.0

[path]
kind = "straight"
length = 100.0
"#;

fn pathfollow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathfollow"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

#[test]
fn run_writes_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), STRAIGHT).unwrap();
    let out = pathfollow(
        &["run", "s.toml", "--out", "r.json", "--trace", "t.csv"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["format_version"], 1);
    assert_eq!(report["scenario"], "straight-100");
    assert_eq!(report["variant"], "proposed");
    assert_eq!(report["completed"], true);
    assert_eq!(report["stuck_events"], 0);
    assert_eq!(report["inside_corridor_pct"], 100.0);

    let trace = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("# format_version=1"));
    assert_eq!(
        lines.next(),
        Some("t,x,y,z,heading,v,v_target,throttle,steer,cte,inside_corridor,stuck_mode")
    );
    let rows = lines.count() as u64;
    assert_eq!(rows, report["ticks"].as_u64().unwrap());
}

#[test]
fn tick_rate_override_changes_tick_count() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), STRAIGHT).unwrap();
    let ticks = |rate: &str| {
        let out = pathfollow(&["--ticks-per-sec", rate, "run", "s.toml"], dir.path());
        assert!(out.status.success());
        let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        (
            r["ticks"].as_f64().unwrap(),
            r["total_time"].as_f64().unwrap(),
        )
    };
    let (n60, t60) = ticks("60");
    let (n120, t120) = ticks("120");
    assert!((n120 / n60 - 2.0).abs() < 0.05, "{n60} vs {n120}");
    assert!((t60 - t120).abs() < 0.2);
}

#[test]
fn parse_error_names_the_field_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        STRAIGHT.replace("length = 100.0", "length = \"long\""),
    )
    .unwrap();
    let out = pathfollow(&["run", "bad.toml"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("path.length"), "{err}");
    assert!(err.contains("bad.toml"), "{err}");
}

#[test]
fn unfinished_run_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.toml"),
        STRAIGHT.replace("time_limit = 60.0", "time_limit = 3.0"),
    )
    .unwrap();
    let out = pathfollow(&["run", "s.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["completed"], false);
    assert_eq!(r["total_time"], 3.0);
}

#[test]
fn gen_paths_then_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = pathfollow(&["gen-paths", "--out", "paths", "--seed", "5"], dir.path());
    assert!(out.status.success());
    let files = std::fs::read_dir(dir.path().join("paths")).unwrap().count();
    assert_eq!(files, 30);

    let out = pathfollow(
        &[
            "suite",
            "paths",
            "--variants",
            "baseline",
            "--seed",
            "5",
            "--trials",
            "1",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["runs"].as_array().unwrap().len(), 30);
    assert_eq!(r["variants"].as_array().unwrap().len(), 1);
    assert!(r["comparison"].is_null());
    // sorted by scenario name
    let names: Vec<_> = r["runs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["scenario"].as_str().unwrap().to_string())
        .collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
}

#[test]
fn suite_rejects_zero_trials_and_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("s")).unwrap();
    std::fs::write(dir.path().join("s/a.toml"), STRAIGHT).unwrap();
    let out = pathfollow(&["suite", "s", "--trials", "0"], dir.path());
    assert!(!out.status.success());

    std::fs::write(
        dir.path().join("s/b.toml"),
        "format_version = 1\nname = \"x\"\n",
    )
    .unwrap();
    let out = pathfollow(&["suite", "s"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("b.toml"), "{err}");

    let out = pathfollow(&["suite", "s", "--variants", "fancy"], dir.path());
    assert!(!out.status.success());
}
