//! End-to-end checks of the binary: exit codes, output formats, config
//! merging, and byte-level reproducibility.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_checkerboard"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should launch")
}

fn stdout_of(output: &Output) -> String {
    assert!(
        output.status.success(),
        "expected success, got {:?}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).expect("stdout should be utf-8")
}

fn scratch(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("checkerboard-cli-{}-{name}", std::process::id()));
    path
}

#[test]
fn empty_interval_reports_known_exact_value() {
    let output = run(&[
        "empty-interval",
        "--p",
        "1/2",
        "--horizon",
        "2",
        "--interval",
        "0:1",
        "--exact",
    ]);
    let body = stdout_of(&output);
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("route,value,exact,stderr,samples"));
    for route in ["pfaffian", "lineage-dp", "enumeration"] {
        let row = lines.next().unwrap_or_else(|| panic!("missing {route} row"));
        assert!(row.starts_with(route), "unexpected row order: {row}");
        assert!(row.contains(",3/8,"), "expected exact 3/8 in: {row}");
        assert!(row.contains("3.7500000000000000e-1"), "bad float in: {row}");
    }
    assert_eq!(lines.next(), None);
}

#[test]
fn flags_override_config_file() {
    let config = scratch("override.json");
    std::fs::write(
        &config,
        r#"{"field": {"kind": "constant", "p": "1/3"}, "horizon": 4, "intervals": [[0, 2]]}"#,
    )
    .expect("config should write");

    let from_file = stdout_of(&run(&[
        "empty-interval",
        "--config",
        config.to_str().expect("temp path should be utf-8"),
    ]));
    assert!(
        from_file.contains("1016/6561"),
        "config-file run should see horizon 4: {from_file}"
    );

    let overridden = stdout_of(&run(&[
        "empty-interval",
        "--config",
        config.to_str().expect("temp path should be utf-8"),
        "--horizon",
        "2",
    ]));
    assert!(
        overridden.contains("4/81"),
        "--horizon flag should win over the file: {overridden}"
    );

    std::fs::remove_file(&config).ok();
}

#[test]
fn csv_output_is_byte_reproducible() {
    let args = [
        "empty-interval",
        "--p",
        "2/5",
        "--horizon",
        "6",
        "--interval",
        "0:2",
        "--mc",
        "--samples",
        "50000",
        "--seed",
        "31",
    ];
    let first = stdout_of(&run(&args));
    let second = stdout_of(&bin().args(args).args(["--threads", "3"]).output().expect("binary should launch"));
    assert_eq!(first, second, "same config must give identical bytes");
    assert!(first.contains("monte-carlo"), "mc route missing: {first}");
}

#[test]
fn malformed_config_exits_with_usage_code_and_writes_nothing() {
    let config = scratch("broken.json");
    let target = scratch("never-written.csv");
    std::fs::write(&config, "{not json").expect("config should write");

    let output = run(&[
        "empty-interval",
        "--config",
        config.to_str().expect("temp path should be utf-8"),
        "--output",
        target.to_str().expect("temp path should be utf-8"),
    ]);
    assert_eq!(output.status.code(), Some(2), "bad config should exit 2");
    assert!(!target.exists(), "no output file may appear on failure");

    std::fs::remove_file(&config).ok();
}

#[test]
fn unknown_kernel_kind_exits_with_usage_code() {
    let output = run(&["kernel-table", "--kind", "sideways", "--delta", "1"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn verify_quick_profile_passes() {
    let output = run(&["verify", "--profile", "quick"]);
    let body = stdout_of(&output);
    assert!(body.contains("duality-triple,ok"), "unexpected table: {body}");
    assert!(!body.contains("FLAG"), "quick profile flagged: {body}");
}

#[test]
fn kernel_table_matches_library_crossing_values() {
    let body = stdout_of(&run(&[
        "kernel-table",
        "--kind",
        "biased",
        "--p",
        "1/2",
        "--T",
        "2",
        "--delta",
        "0..2",
    ]));
    let spec = checkerboard::KernelSpec::Biased {
        horizon: 2,
        p: checkerboard::RationalProbability::from_ints(1, 2).expect("valid weight"),
    };
    let mut lines = body.lines().skip(1);
    for separation in 0..=2 {
        let expected = spec.a_crossing_sites(separation).expect("kernel should evaluate");
        let row = lines.next().expect("missing grid row");
        let value: f64 = row.split(',').nth(2).expect("value column").parse().expect("float cell");
        assert!(
            (value - expected.to_f64()).abs() < 1e-15,
            "row {row} disagrees with library value {}",
            expected.to_f64()
        );
    }
}

#[test]
fn simulate_is_seed_deterministic() {
    let args = [
        "simulate",
        "--p",
        "1/2",
        "--horizon",
        "4",
        "--window",
        "0..5",
        "--streams",
        "2",
        "--seed",
        "12",
    ];
    let first = stdout_of(&run(&args));
    let repeat = stdout_of(&run(&args));
    assert_eq!(first, repeat);

    let mut reseeded = args;
    *reseeded.last_mut().expect("seed is the last argument") = "13";
    let other = stdout_of(&run(&reseeded));
    assert_ne!(first, other, "different seeds should give different paths");
}

#[test]
fn json_format_carries_metadata() {
    let body = stdout_of(&run(&[
        "correlate",
        "--p",
        "1/2",
        "--horizon",
        "3",
        "--sites",
        "0,2",
        "--format",
        "json",
        "--seed",
        "77",
    ]));
    let parsed: serde_json::Value = serde_json::from_str(&body).expect("output should be json");
    assert_eq!(parsed["metadata"]["command"], "correlate");
    assert_eq!(parsed["metadata"]["seed"], 77);
    assert!(parsed["metadata"]["version"].is_string());
    assert_eq!(parsed["columns"][0], "route");
    assert!(parsed["rows"].as_array().is_some_and(|rows| !rows.is_empty()));
}

#[test]
fn output_flag_writes_the_table_to_disk() {
    let target = scratch("table.csv");
    let output = run(&[
        "empty-interval",
        "--p",
        "1/2",
        "--horizon",
        "1",
        "--interval",
        "0:1",
        "--output",
        target.to_str().expect("temp path should be utf-8"),
    ]);
    assert!(output.status.success());
    assert!(output.stdout.is_empty(), "table should go to the file only");
    let written = std::fs::read_to_string(&target).expect("output file should exist");
    assert!(written.contains("pfaffian,2.5000000000000000e-1,1/4"), "bad table: {written}");
    std::fs::remove_file(&target).ok();
}
