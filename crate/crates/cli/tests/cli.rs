//! CLI integration tests: output contracts, the exit-code contract
//! (0 success / 1 domain or verification failure / 2 usage error), and
//! byte-identical determinism for repeated seeded runs.

use std::process::{Command, Output};

fn rsiiib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsiiib"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

#[test]
fn params_derives_the_documented_values() {
    let out = rsiiib(&["params", "--n", "2", "--M", "2", "--g", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("a = 1.5707963267948966"), "{text}");
    assert!(text.contains("y = 0.7853981633974483"), "{text}");
}

#[test]
fn qspectrum_csv_contract() {
    let out = rsiiib(&[
        "qspectrum",
        "--n",
        "2",
        "--M",
        "2",
        "--g",
        "1",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines[0], "nu;actions;e_re;e_im;h_real");
    assert_eq!(lines.len(), 4, "header plus three states: {text}");
    assert!(lines[1].starts_with("0;1;"));
    assert!(lines[2].starts_with("1;2;"));
    assert!(lines[3].starts_with("2;3;"));
}

#[test]
fn qspectrum_json_round_trips_canonically() {
    let out = rsiiib(&[
        "qspectrum",
        "--n",
        "3",
        "--M",
        "2",
        "--g",
        "1",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let value: serde_json::Value = serde_json::from_str(&text).expect("valid JSON");
    assert!(value.get("params").is_some());
    assert_eq!(value["params"]["n"], 3);
    assert_eq!(value["params"]["M"], 2);
    assert_eq!(value["states"].as_array().unwrap().len(), 6);
    // Canonical form: parsing and re-serializing reproduces the bytes.
    let reserialized = format!("{}\n", serde_json::to_string(&value).unwrap());
    assert_eq!(text, reserialized);
}

#[test]
fn every_json_document_is_canonical() {
    let runs: Vec<Vec<&str>> = vec![
        vec![
            "params", "--n", "4", "--M", "3", "--g", "0.5", "--format", "json",
        ],
        vec![
            "action-map",
            "--n",
            "3",
            "--M",
            "2",
            "--g",
            "1",
            "--theta",
            "0.4,0.9",
            "--format",
            "json",
        ],
        vec![
            "flow", "--n", "2", "--M", "2", "--g", "1", "--theta", "0.7", "--t", "0.01", "--dt",
            "0.001", "--format", "json",
        ],
        vec![
            "verify", "--n", "2", "--M", "2", "--g", "1", "--suite", "quantum", "--format", "json",
        ],
    ];
    for args in runs {
        let out = rsiiib(&args);
        assert!(out.status.success(), "{args:?}");
        let text = stdout(&out);
        let value: serde_json::Value = serde_json::from_str(&text).expect("valid JSON");
        let reserialized = format!("{}\n", serde_json::to_string(&value).unwrap());
        assert_eq!(text, reserialized, "{args:?}");
    }
}

#[test]
fn usage_errors_exit_two() {
    // Invalid M = 0 is rejected by validation.
    let out = rsiiib(&["qspectrum", "--n", "2", "--M", "0", "--g", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    // Neither parameter pair supplied.
    let out = rsiiib(&["params", "--n", "2"]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown verify suite.
    let out = rsiiib(&[
        "verify", "--n", "2", "--M", "2", "--g", "1", "--suite", "bogus",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Point outside the polytope.
    let out = rsiiib(&[
        "action-map",
        "--n",
        "3",
        "--M",
        "2",
        "--g",
        "1",
        "--gamma",
        "0.5,1.0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn action_map_centroid_lands_in_polytope() {
    let out = rsiiib(&["action-map", "--n", "3", "--M", "2", "--g", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(!text.contains("Outside"), "{text}");
}

#[test]
fn flow_reports_conservation_footer() {
    let out = rsiiib(&[
        "flow", "--n", "2", "--M", "2", "--g", "1", "--theta", "0.7", "--t", "0.05", "--dt",
        "0.001",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("t;gamma;theta;H;alpha\n"));
    let footer = text.trim_end().lines().last().unwrap();
    assert!(footer.starts_with("# dH_max="), "{footer}");
    assert!(footer.contains("exited=false"), "{footer}");
    let dh: f64 = footer
        .split("dH_max=")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(dh < 1e-8, "dH_max = {dh}");
}

#[test]
fn flow_exiting_the_interior_exits_one() {
    // Zero-energy line: gamma decreases to the facet in finite time.
    let out = rsiiib(&[
        "flow",
        "--n",
        "2",
        "--M",
        "2",
        "--g",
        "1",
        "--gamma",
        "2.0",
        "--theta",
        "1.5707963267948966",
        "--t",
        "5",
        "--dt",
        "0.001",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("exited=true"), "{text}");
}

#[test]
fn verify_quantum_passes() {
    let out = rsiiib(&[
        "verify", "--n", "3", "--M", "2", "--g", "1", "--suite", "quantum",
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("overall: PASS"), "{text}");
}

#[test]
fn verify_tolerance_override_forces_failure_exit_one() {
    let out = rsiiib(&[
        "verify",
        "--n",
        "2",
        "--M",
        "2",
        "--g",
        "1",
        "--suite",
        "classical",
        "--samples",
        "3",
        "--tol",
        "trace-identity=1e-30",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("FAIL trace-identity"), "{text}");
}

#[test]
fn repeated_seeded_runs_are_byte_identical() {
    let args = [
        "verify",
        "--n",
        "2",
        "--M",
        "2",
        "--g",
        "1",
        "--suite",
        "all",
        "--samples",
        "5",
        "--seed",
        "42",
        "--format",
        "json",
    ];
    let first = rsiiib(&args);
    let second = rsiiib(&args);
    assert!(first.status.success(), "{}", stdout(&first));
    assert_eq!(first.stdout, second.stdout);

    let args = [
        "qspectrum",
        "--n",
        "4",
        "--M",
        "3",
        "--g",
        "0.5",
        "--format",
        "json",
    ];
    let first = rsiiib(&args);
    let second = rsiiib(&args);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn output_flag_writes_file() {
    let dir = std::env::temp_dir().join("rsiiib-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("spectrum.csv");
    let out = rsiiib(&[
        "qspectrum",
        "--n",
        "2",
        "--M",
        "2",
        "--g",
        "1",
        "--format",
        "csv",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with("nu;actions;"));
    std::fs::remove_file(&path).ok();
}

#[test]
fn coupling_via_a_y_matches_m_g() {
    // a = 2pi/5, y = pi/5 corresponds to (n, M, g) = (3, 2, 1).
    let via_ay = rsiiib(&[
        "qspectrum",
        "--n",
        "3",
        "--a",
        "1.2566370614359172",
        "--y",
        "0.6283185307179586",
        "--format",
        "json",
    ]);
    assert!(
        via_ay.status.success(),
        "{}",
        String::from_utf8_lossy(&via_ay.stderr)
    );
    let via_mg = rsiiib(&[
        "qspectrum",
        "--n",
        "3",
        "--M",
        "2",
        "--g",
        "1",
        "--format",
        "json",
    ]);
    let a: serde_json::Value = serde_json::from_slice(&via_ay.stdout).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&via_mg.stdout).unwrap();
    assert_eq!(a["params"]["M"], b["params"]["M"]);
    assert_eq!(a["states"], b["states"]);
}

/// Acceptance criterion 12: determinism plus the exit-code contract.
#[test]
fn criterion_12_cli_determinism_and_exit_codes() {
    let args = [
        "verify",
        "--n",
        "2",
        "--M",
        "2",
        "--g",
        "1",
        "--suite",
        "double",
        "--samples",
        "10",
        "--seed",
        "7",
        "--format",
        "json",
    ];
    let first = rsiiib(&args);
    let second = rsiiib(&args);
    let deterministic = first.stdout == second.stdout;
    let pass_ok = first.status.code() == Some(0);
    let usage_ok = rsiiib(&["qspectrum", "--n", "2", "--M", "0", "--g", "1"])
        .status
        .code()
        == Some(2);
    let fail_ok = rsiiib(&[
        "verify",
        "--n",
        "2",
        "--M",
        "2",
        "--g",
        "1",
        "--suite",
        "classical",
        "--samples",
        "3",
        "--tol",
        "lax-unitarity=1e-30",
    ])
    .status
    .code()
        == Some(1);
    let pass = deterministic && pass_ok && usage_ok && fail_ok;
    println!(
        "ACCEPTANCE 12 cli-determinism             {} (byte-identical={deterministic}, exit0={pass_ok}, exit2={usage_ok}, exit1={fail_ok})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}
