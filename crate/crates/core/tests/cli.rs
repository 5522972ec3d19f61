use std::path::Path;
use std::process::{Command, Output};

use memctl::config::load_config;
use memctl::report::SimReport;
use memctl::{ControllerConfig, DramTimingConfig};

fn memctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memctl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn default_config_document_loads_back() {
    let out = memctl(&["dump-default-config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("format_version=1"));
    let (c, t) = load_config(&text).unwrap();
    assert_eq!(c, ControllerConfig::default());
    assert_eq!(t, DramTimingConfig::default());
}

#[test]
fn gen_run_check_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.trace");
    let log = dir.path().join("t.log");
    let json = dir.path().join("r.json");
    let out = memctl(&["gen", "--workload", "random", "--count", "300", "--write-fraction", "0.3", "--out", p(&trace)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = memctl(&[
        "run", "--trace", p(&trace), "--baseline", "--log", p(&log), "--format", "json", "--out", p(&json),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = SimReport::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(r.cache_requests, 300);
    assert!(r.baseline_cycles.is_some());

    let out = memctl(&["check", "--log", p(&log)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok"));
}

#[test]
fn sweep_emits_one_csv_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.trace");
    assert!(memctl(&["gen", "--workload", "random", "--count", "200", "--out", p(&trace)]).status.success());
    let out = memctl(&[
        "sweep", "--trace", p(&trace), "--sweep", "sched.batch_size=4,16,64", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("4,") && rows[2].starts_with("64,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.trace");
    assert!(memctl(&["gen", "--workload", "sequential", "--count", "4096", "--out", p(&trace)]).status.success());

    assert_eq!(memctl(&["no-such-action"]).status.code(), Some(1));

    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "sched.batch_size = 12\n").unwrap();
    assert_eq!(memctl(&["run", "--trace", p(&trace), "--config", p(&cfg)]).status.code(), Some(1));

    let bad = dir.path().join("bad.trace");
    std::fs::write(&bad, "0 0 R C 0x0\n").unwrap();
    assert_eq!(memctl(&["run", "--trace", p(&bad)]).status.code(), Some(2));

    let wide = dir.path().join("wide.trace");
    std::fs::write(&wide, "0 0 R C 0x0 64\n0 99 R C 0x40 64\n").unwrap();
    assert_eq!(memctl(&["run", "--trace", p(&wide)]).status.code(), Some(2));

    // A cache request that finishes before an earlier DMA.
    let log = dir.path().join("bad.log");
    std::fs::write(
        &log,
        "#format_version=1\n0 submitted 0 0 D R 0x0 4096\n1 submitted 1 0 C R 0x8000 64\n20 completed 1\n300 completed 0\n",
    )
    .unwrap();
    let out = memctl(&["check", "--log", p(&log)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("rule d"));
}
