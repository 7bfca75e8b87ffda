use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasegauge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

#[test]
fn solve_oscillator_spectrum() {
    let r = json(&["solve", "--set", "states=5"]);
    for (n, e) in floats(&r["results"]["energies"]).iter().enumerate() {
        assert!((e - (n as f64 + 0.5)).abs() < 1e-3 * (n as f64 + 0.5));
    }
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["command"], "solve");
    assert_eq!(r["config"]["states"], 5);
    assert!(r["version"].as_str().unwrap().starts_with("phasegauge "));
    assert!(r.get("wall_time_s").is_none());
}

#[test]
fn solve_zero_states() {
    let r = json(&["solve", "--set", "states=0"]);
    assert!(r["results"]["energies"].as_array().unwrap().is_empty());
}

#[test]
fn config_errors_name_the_key() {
    let out = run(&["solve", "--set", "stats=3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stats"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "# oscillator\nhbar = 1\nmass = oops\n").unwrap();
    let out = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mass"));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "states = 2\nhbar = 0.5\n").unwrap();
    let r = json(&[
        "solve",
        "--config",
        path.to_str().unwrap(),
        "--set",
        "states=3",
    ]);
    assert_eq!(r["config"]["states"], 3);
    assert_eq!(r["config"]["hbar"], 0.5);
    let e = floats(&r["results"]["energies"]);
    assert!((e[2] - 1.25).abs() < 1e-3);
}

#[test]
fn exit_codes_by_error_class() {
    assert_eq!(
        run(&["orbit", "--set", "orbit_energies=-1"]).status.code(),
        Some(3)
    );
    let out = run(&[
        "cocycle",
        "--set",
        "loop_mode=trajectory",
        "--set",
        "loop_energy=1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["flow", "--threads", "0"]).status.code(), Some(1));
}

#[test]
fn residual_sweep() {
    let r = json(&["residual", "--set", "f_list=0; p*q/2; p*q; q^3"]);
    let entries = r["results"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 4);
    for e in &entries[..3] {
        assert!(e["schrodinger_residual"].as_f64().unwrap() < 1e-3);
        assert!(e["commutator_residual"].as_f64().unwrap() < 1e-6);
    }
    assert!(entries[3]["error"]
        .as_str()
        .unwrap()
        .contains("under-resolves"));
    let r = json(&["residual", "--set", "f_list="]);
    assert!(r["results"]["entries"].as_array().unwrap().is_empty());
}

#[test]
fn cocycle_reports() {
    let r = json(&["cocycle"]);
    assert!(r["results"]["max_quadruple_deviation"].as_f64().unwrap() < 1e-12);
    assert_eq!(r["results"]["quadruples"], 4);
    let r = json(&["cocycle", "--set", "cover_nx=1", "--set", "cover_ny=1"]);
    let notes: Vec<&str> = r["results"]["notes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n.as_str().unwrap())
        .collect();
    assert!(notes.contains(&"no triple overlaps"));
}

#[test]
fn seeded_reports_are_byte_identical() {
    let args = ["cocycle", "--seed", "9", "--set", "point_rule=seeded"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let other = run(&["cocycle", "--seed", "10", "--set", "point_rule=seeded"]).stdout;
    assert_ne!(run(&args).stdout, other);
}

#[test]
fn gauge_examples() {
    let r = json(&["gauge", "--set", "f=p*q/2"]);
    assert_eq!(r["results"]["delta0_solvable"], false);
    assert_eq!(r["results"]["equivalence_certificate"], "exact");
    let r = json(&["gauge", "--set", "f=q^2 + p^2"]);
    assert_eq!(r["results"]["delta0_solvable"], true);
    assert_eq!(r["results"]["g"], "q^2");
    assert_eq!(r["results"]["h"], "p^2");
}

#[test]
fn gauge_with_1000_terms_is_fast() {
    let terms: Vec<String> = (0..1000)
        .map(|k| format!("{}/{}*q^{}*p^{}", k % 13 + 1, k % 7 + 1, k / 40, k % 40))
        .collect();
    let f = format!("f={}", terms.join(" + "));
    let t = Instant::now();
    let r = json(&["gauge", "--set", &f]);
    assert!(t.elapsed().as_secs_f64() < 1.0);
    assert_eq!(r["results"]["terms"], 1000);
    assert_eq!(r["results"]["equivalence_certificate"], "exact");
}

#[test]
fn wkb_and_orbit_tables() {
    let r = json(&["wkb"]);
    assert!(r["results"]["max_rel_error"].as_f64().unwrap() < 0.05);
    let r = json(&["orbit"]);
    for row in r["results"]["orbits"].as_array().unwrap() {
        let e = row["energy"].as_f64().unwrap();
        assert!((row["area"].as_f64().unwrap() - 2.0 * std::f64::consts::PI * e).abs() < 1e-8);
    }
    let r = json(&[
        "orbit",
        "--set",
        "potential=0,0,0,0,1",
        "--set",
        "orbit_energies=1,3,6,10,15",
    ]);
    for row in r["results"]["orbits"].as_array().unwrap() {
        assert!(row["count_difference"].as_i64().unwrap().abs() <= 1);
    }
}

#[test]
fn csv_output_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flow.csv");
    let out = run(&["flow", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,q,p"));
    assert_eq!(lines.next(), Some("0,1,0"));
    let cover = String::from_utf8(run(&["cover", "--format", "csv"]).stdout).unwrap();
    assert_eq!(cover.lines().count(), 10);
}

#[test]
fn timing_is_opt_in() {
    let r = json(&["cover", "--timing"]);
    assert!(r["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn lift_summary() {
    let r = json(&[
        "lift", "--set", "f=p*q/8", "--set", "nq=64", "--set", "np=64",
    ]);
    // |Ψ| = |ψ| on every node, so Σ|Ψ|² dq = np · ‖ψ‖² ≈ 64
    let s = r["results"]["sum_abs_sq_dq"].as_f64().unwrap();
    assert!((s - 64.0).abs() < 1e-6 * 64.0, "{s}");
}
