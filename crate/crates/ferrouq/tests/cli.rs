//! End-to-end tests of the command-line binary: exit codes, file formats,
//! determinism of emitted tables, and config override precedence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU32, Ordering};

fn scratch_dir(tag: &str) -> PathBuf {
    static STAMP: AtomicU32 = AtomicU32::new(0);
    let dir = std::env::temp_dir().join(format!(
        "ferrouq-cli-{}-{}-{}",
        tag,
        std::process::id(),
        STAMP.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ferrouq"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Strip the time_s column (the only run-dependent field) from summary.csv.
fn without_times(summary: &str) -> Vec<Vec<String>> {
    summary
        .lines()
        .map(|line| {
            let mut cells: Vec<String> = line.split(',').map(str::to_string).collect();
            cells.remove(4);
            cells
        })
        .collect()
}

#[test]
fn check_subcommand_reports_all_invariants() {
    let out = run(&["check"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "stdout: {stdout}");
    assert!(stdout.contains("check: all invariants hold"), "stdout: {stdout}");
    assert_eq!(stdout.matches(": ok").count(), 6, "stdout: {stdout}");
}

#[test]
fn study_runs_are_reproducible_files() {
    let dir = scratch_dir("study");
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let args = [
            "study",
            "--set",
            "study=plaplace",
            "--set",
            "mesh_n=8",
            "--set",
            "q_max=3",
            "--set",
            "q_ref=5",
            "--set",
            &format!("out={}", out.display()),
        ];
        let res = run(&args);
        assert_eq!(
            res.status.code(),
            Some(0),
            "stderr: {}",
            String::from_utf8_lossy(&res.stderr)
        );
    }

    let summary_a = read(&out_a.join("summary.csv"));
    let summary_b = read(&out_b.join("summary.csv"));
    assert_eq!(without_times(&summary_a), without_times(&summary_b));

    let mut lines = summary_a.lines();
    assert_eq!(lines.next(), Some("level,N_q,error,slope_estimate,time_s"));
    assert_eq!(lines.clone().count(), 3);
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 5, "line: {line}");
        let _level: usize = cells[0].parse().unwrap();
        let _points: usize = cells[1].parse().unwrap();
        let error: f64 = cells[2].parse().unwrap();
        assert!(error.is_finite() && error >= 0.0);
    }

    // Everything except summary.csv (time_s) and the echoed output path is
    // byte-identical.
    for name in [
        "error_vs_level.csv",
        "error_vs_points.csv",
        "expectation_q1.csv",
        "variance_q1.csv",
    ] {
        assert_eq!(read(&out_a.join(name)), read(&out_b.join(name)), "{name} differs");
    }

    // The echoed config resolves back to an equivalent run.
    let echo = read(&out_a.join("config.echo"));
    let parsed = ferrouq::config::resolve(Some(&echo), &[]).unwrap();
    assert_eq!(parsed.to_echo(), echo);
    assert_eq!(parsed.mesh_n, 8);
    assert_eq!(parsed.q_ref, Some(5));
}

#[test]
fn unknown_config_keys_exit_with_a_suggestion() {
    let res = run(&["study", "--set", "study=plaplace", "--set", "mesh_m=8"]);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("mesh_n"), "stderr: {stderr}");
}

#[test]
fn missing_study_key_is_a_config_error() {
    let res = run(&["study", "--set", "mesh_n=8"]);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("study"), "stderr: {stderr}");
}

#[test]
fn non_monotone_measurements_exit_with_a_data_error() {
    let dir = scratch_dir("badcsv");
    let csv = dir.join("bad.csv");
    std::fs::write(&csv, "s,f_sample_1\n0,0\n0.5,1.0\n1.0,0.5\n").unwrap();
    let res = run(&[
        "kl",
        "--set",
        "study=kl-square",
        "--set",
        &format!("bh_csv={}", csv.display()),
        "--set",
        &format!("out={}", dir.join("out").display()),
    ]);
    assert_eq!(
        res.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&res.stderr)
    );
}

#[test]
fn iteration_starvation_exits_with_a_convergence_error() {
    let dir = scratch_dir("starve");
    let res = run(&[
        "solve",
        "--set",
        "study=lshape",
        "--set",
        "mesh_level=1",
        "--set",
        "max_iter=2",
        "--set",
        "scheme=kacanov",
        "--set",
        &format!("out={}", dir.display()),
    ]);
    assert_eq!(
        res.status.code(),
        Some(4),
        "stderr: {}",
        String::from_utf8_lossy(&res.stderr)
    );
}

#[test]
fn solve_emits_a_readable_field() {
    let dir = scratch_dir("solve");
    let res = run(&[
        "solve",
        "--set",
        "study=plaplace",
        "--set",
        "mesh_n=8",
        "--set",
        &format!("out={}", dir.display()),
    ]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&res.stderr)
    );
    let path = dir.join("solution.csv");
    let field = ferrouq::io::read_field_csv(&path).unwrap();
    assert_eq!(field.values.len(), 81);
    assert_eq!(field.coords.len(), 81);
    // The radial solution peaks at the center of the square.
    let center = field
        .coords
        .iter()
        .position(|&[x, y]| (x - 0.5).abs() < 1e-12 && (y - 0.5).abs() < 1e-12)
        .unwrap();
    let max = field.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(field.values[center] > 0.0);
    assert!((field.values[center] - max).abs() < 1e-12);
}

#[test]
fn set_overrides_beat_the_config_file() {
    let dir = scratch_dir("override");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "study = plaplace\nmesh_n = 8\nq_max = 2\nq_ref = 4\n").unwrap();
    let out = dir.join("out");
    let res = run(&[
        "study",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "mesh_n=6",
        "--set",
        &format!("out={}", out.display()),
    ]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&res.stderr)
    );
    let echo = read(&out.join("config.echo"));
    let parsed = ferrouq::config::resolve(Some(&echo), &[]).unwrap();
    assert_eq!(parsed.mesh_n, 6, "override should win over the file");
    assert_eq!(parsed.q_max, 2, "file keys without overrides should survive");
}
