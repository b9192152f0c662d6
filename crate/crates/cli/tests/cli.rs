//! Black-box tests of the command-line interface: exit codes, output files,
//! and reproducibility across thread counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn workdir(test: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("geothermo-cli-{test}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geothermo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const FULL_SHIFT_ENUM: &str = r#"{
  "schema": 1,
  "system": { "shift": { "adjacency": [[1, 1], [1, 1]], "roof": [1.0, 1.0] } },
  "potentials": [
    { "name": "zero", "constant": 0.0 },
    { "name": "freq0", "per_symbol": [1.0, 0.0] }
  ],
  "weight_potential": "zero",
  "t_grid": { "start": 1.0, "stop": 6.0, "step": 1.0 },
  "window": 1.0
}"#;

#[test]
fn enumerate_writes_every_orbit_with_integrals() {
    let dir = workdir("enumerate");
    let config = write_config(&dir, FULL_SHIFT_ENUM);
    let out = run(&["--out", dir.to_str().unwrap(), "enumerate", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(stdout_of(&out).contains("23 closed orbits"), "{}", stdout_of(&out));

    let csv = std::fs::read_to_string(dir.join("orbits.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "class,length,primitive,integral_zero,integral_freq0");
    assert_eq!(lines.len(), 24); // header + one row per orbit

    // the two fixed points appear first, at length one
    assert!(lines[1].starts_with("0,1.0000000000000000e0,true,0.0000000000000000e0,"));
    // every float cell parses back to the identical bits it was printed from
    for line in &lines[1..] {
        for cell in line.split(',').skip(3) {
            let value: f64 = cell.parse().unwrap();
            assert_eq!(format!("{value:.16e}"), *cell);
        }
    }
}

#[test]
fn malformed_system_exits_two() {
    let dir = workdir("badsys");
    let config = write_config(
        &dir,
        r#"{
  "schema": 1,
  "system": { "shift": { "adjacency": [[1, 1], [1]], "roof": [1.0, 1.0] } },
  "potentials": [{ "name": "zero", "constant": 0.0 }],
  "weight_potential": "zero",
  "t_grid": { "start": 1.0, "stop": 4.0, "step": 1.0 },
  "window": 1.0
}"#,
    );
    let out = run(&["--out", dir.to_str().unwrap(), "enumerate", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("adjacency must be square"), "{}", stderr_of(&out));
}

#[test]
fn unusable_grid_exits_three() {
    let dir = workdir("shortgrid");
    // every grid point sits below the shortest orbit, so no slope can be read
    let config = write_config(
        &dir,
        r#"{
  "schema": 1,
  "system": { "shift": { "adjacency": [[1, 1], [1, 1]], "roof": [1.0, 1.0] } },
  "potentials": [{ "name": "zero", "constant": 0.0 }],
  "weight_potential": "zero",
  "t_grid": { "start": 0.2, "stop": 0.8, "step": 0.2 },
  "window": 0.1
}"#,
    );
    let out = run(&["--out", dir.to_str().unwrap(), "pressure", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("insufficient grid"), "{}", stderr_of(&out));
}

#[test]
fn impossible_event_exits_four() {
    let dir = workdir("noevent");
    // a letter frequency can never exceed one
    let config = write_config(
        &dir,
        r#"{
  "schema": 1,
  "system": { "shift": { "adjacency": [[1, 1], [1, 1]], "roof": [1.0, 1.0] } },
  "potentials": [
    { "name": "zero", "constant": 0.0 },
    { "name": "freq0", "per_symbol": [1.0, 0.0] }
  ],
  "weight_potential": "zero",
  "t_grid": { "start": 4.0, "stop": 10.0, "step": 1.0 },
  "window": 1.0,
  "predicate": { "observable": "freq0", "direction": "at_least", "threshold": 1.5 }
}"#,
    );
    let out = run(&["--out", dir.to_str().unwrap(), "deviation", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("event never realized"), "{}", stderr_of(&out));
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let config_body = r#"{
  "schema": 1,
  "system": { "shift": { "adjacency": [[1, 1], [1, 0]], "roof": [1.0, 1.5] } },
  "potentials": [
    { "name": "zero", "constant": 0.0 },
    { "name": "f10", "per_symbol": [1.0, 0.0] }
  ],
  "weight_potential": "f10",
  "t_grid": { "start": 8.0, "stop": 14.0, "step": 1.0 },
  "window": 1.0
}"#;
    let mut results: Vec<(String, serde_json::Value)> = Vec::new();
    for threads in ["1", "4"] {
        let dir = workdir(&format!("threads{threads}"));
        let config = write_config(&dir, config_body);
        let out = run(&[
            "--threads",
            threads,
            "--out",
            dir.to_str().unwrap(),
            "enumerate",
            "--config",
            config.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr_of(&out));
        let csv = std::fs::read_to_string(dir.join("orbits.csv")).unwrap();

        let out = run(&[
            "--threads",
            threads,
            "--out",
            dir.to_str().unwrap(),
            "pressure",
            "--config",
            config.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr_of(&out));
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("pressure.json")).unwrap())
                .unwrap();
        results.push((csv, json));
    }

    // enumeration order and formatting are thread-independent, byte for byte
    assert_eq!(results[0].0, results[1].0);
    // the log-sum reduction is reproducible to well below the documented bound
    let final_gap = (results[0].1["final"].as_f64().unwrap()
        - results[1].1["final"].as_f64().unwrap())
    .abs();
    assert!(final_gap <= 1e-10, "final estimates differ by {final_gap}");
    let oracle_gap = (results[0].1["oracle"].as_f64().unwrap()
        - results[1].1["oracle"].as_f64().unwrap())
    .abs();
    assert!(oracle_gap <= 1e-10, "oracle pressures differ by {oracle_gap}");
}
