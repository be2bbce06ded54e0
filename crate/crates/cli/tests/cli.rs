use std::process::{Command, Output};

fn opweave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opweave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn json_stdout(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout_str(out)).expect("json stdout")
}

#[test]
fn weave_dim4_matches_known_entries() {
    let out = opweave(&["weave", "--dim", "4"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("4 12"));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let expected = [
        (1, 1, 0.5),
        (1, 2, -s),
        (1, 3, -0.5),
        (2, 1, 0.5),
        (2, 2, s),
        (2, 3, -0.5),
        (3, 1, 0.5),
        (3, 3, 0.5),
        (3, 4, -s),
        (4, 1, 0.5),
        (4, 3, 0.5),
        (4, 4, s),
    ];
    for ((row, col, val), line) in expected.iter().zip(lines) {
        let mut parts = line.split_whitespace();
        assert_eq!(parts.next().unwrap().parse::<usize>().unwrap(), *row);
        assert_eq!(parts.next().unwrap().parse::<usize>().unwrap(), *col);
        let v: f64 = parts.next().unwrap().parse().unwrap();
        assert!((v - val).abs() <= 1e-15, "({row},{col}): {v} vs {val}");
    }
}

#[test]
fn identical_invocations_are_byte_identical() {
    for args in [
        vec!["weave", "--dim", "11"],
        vec!["plan", "--n", "16", "--nq", "2"],
        vec!["u1", "--nx", "3", "--ny", "3", "--nq", "2"],
    ] {
        let a = opweave(&args);
        let b = opweave(&args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "non-deterministic output for {args:?}");
    }
}

#[test]
fn export_then_verify_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w11.coord");
    let out = opweave(&["weave", "--dim", "11", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());

    let verify = opweave(&["verify", "--in", path.to_str().unwrap()]);
    assert!(verify.status.success());
    let report = json_stdout(&verify);
    assert_eq!(report["dim"], 11);
    assert_eq!(report["orthogonal"], true);
    assert_eq!(report["uniform_first_column"], true);
    assert_eq!(report["column_sums_ok"], true);

    // The exported bytes equal a fresh emission.
    let direct = opweave(&["weave", "--dim", "11"]);
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
}

#[test]
fn verify_rejects_non_weaved_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("id.coord");
    std::fs::write(&path, "2 2\n1 1 1.0\n2 2 1.0\n").unwrap();
    let verify = opweave(&["verify", "--in", path.to_str().unwrap()]);
    assert_eq!(verify.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&verify)).unwrap();
    assert_eq!(report["orthogonal"], true);
    assert_eq!(report["uniform_first_column"], false);
    let err: serde_json::Value =
        serde_json::from_slice(&verify.stderr).expect("structured error record");
    assert_eq!(err["error"]["code"], "verification-failed");
}

#[test]
fn plan_reports_doc_reduction() {
    let out = opweave(&["plan", "--n", "16", "--nq", "2"]);
    assert!(out.status.success());
    let report = json_stdout(&out);
    assert_eq!(report["doc"]["original"], 16);
    assert_eq!(report["doc"]["rotated"], 4);
    assert_eq!(report["partition"], serde_json::json!([4, 4, 4, 4]));
}

#[test]
fn plan_emits_dot_graph() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("coupling.dot");
    let out = opweave(&[
        "plan",
        "--n",
        "4",
        "--nq",
        "2",
        "--subblocks",
        "2",
        "--graph",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let dot = std::fs::read_to_string(&path).unwrap();
    assert!(dot.starts_with("graph coupling {"));
    assert!(dot.contains("O1 -- O2;"));
    assert!(dot.contains("O1 -- O3;"));
}

#[test]
fn u1_reports_lattice_magnitudes() {
    let out = opweave(&["u1", "--nx", "3", "--ny", "3", "--nq", "2"]);
    assert!(out.status.success());
    let report = json_stdout(&out);
    assert_eq!(report["n_p"], 8);
    assert_eq!(report["gates"]["original"]["magnetic_global_magnitude_class"], 5);
    let weaved = report["gates"]["weaved"]["total_magnitude_class"].as_i64().unwrap();
    assert!((weaved - 2).abs() <= 1);
    assert!(report["rescale"]["global"].as_f64().unwrap() > 1.0);
}

#[test]
fn u1_exports_electric_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.coord");
    let a_rot = dir.path().join("a_rot.coord");
    let out = opweave(&[
        "u1",
        "--nx",
        "2",
        "--ny",
        "2",
        "--nq",
        "2",
        "--report",
        dir.path().join("report.json").to_str().unwrap(),
        "--export-electric",
        a.to_str().unwrap(),
        "--export-electric-rotated",
        a_rot.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("3 "));
    assert!(std::fs::read_to_string(&a_rot).unwrap().starts_with("3 "));
}

#[test]
fn spectrum_modes_and_deviation() {
    let exact = opweave(&[
        "spectrum", "--nx", "2", "--ny", "2", "--nq", "1", "--mode", "rotated-exact",
    ]);
    assert!(exact.status.success());
    let report = json_stdout(&exact);
    assert_eq!(report["eigenvalues"].as_array().unwrap().len(), 8);
    let dev = report["deviation_from_original"]["max_abs_diff"].as_f64().unwrap();
    assert!(dev < 1e-10, "exact mode deviates: {dev}");

    let redig = opweave(&[
        "spectrum", "--nx", "2", "--ny", "2", "--nq", "1", "--mode", "redigitized",
    ]);
    assert!(redig.status.success());
    let report = json_stdout(&redig);
    assert!(report["rescale"]["global"].as_f64().unwrap() > 1.0);
    for range in report["argument_ranges"].as_array().unwrap() {
        let lo = range[0].as_f64().unwrap();
        let hi = range[1].as_f64().unwrap();
        assert!(lo >= -std::f64::consts::PI && hi <= std::f64::consts::PI);
    }
}

#[test]
fn trotter_error_table_decreases() {
    // n_q = 1 puts every field level at ±π/2 where the cosines vanish and
    // the split is exact; two qubits give a genuine Trotter error.
    let out = opweave(&[
        "trotter", "--nx", "2", "--ny", "2", "--nq", "2", "--t", "0.5", "--steps", "4,8,16",
    ]);
    assert!(out.status.success());
    let report = json_stdout(&out);
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let errs: Vec<f64> = rows
        .iter()
        .map(|r| r["operator_norm_error"].as_f64().unwrap())
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "errors {errs:?}");
    for row in rows {
        assert!(row["unitarity_defect"].as_f64().unwrap() < 1e-9);
    }
}

#[test]
fn usage_errors_exit_2() {
    let out = opweave(&["weave"]);
    assert_eq!(out.status.code(), Some(2));
    let out = opweave(&["verify", "--tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn resource_cap_exits_3() {
    let out = opweave(&["spectrum", "--nx", "3", "--ny", "3", "--nq", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["code"], "resource-cap");
}

#[test]
fn out_dir_env_var_prefixes_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_opweave"))
        .args(["weave", "--dim", "3", "--out", "w3.coord"])
        .env("OPWEAVE_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("w3.coord").exists());
}
