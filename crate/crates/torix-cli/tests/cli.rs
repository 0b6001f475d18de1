//! End-to-end tests of the `torix` binary: exit codes, report formats, exact
//! counts on small windows, and byte-determinism of the CSV reports.

use std::path::PathBuf;
use std::process::{Command, Output};

fn torix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torix"))
        .args(args)
        .env_remove("TORIX_THREADS")
        .output()
        .expect("binary runs")
}

fn torix_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torix"))
        .args(args)
        .env_remove("TORIX_THREADS")
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout_str(out)).expect("stdout parses as JSON")
}

/// Write `contents` under a unique name in the cargo-managed temp dir.
fn tmp_file(name: &str, contents: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(&dir).expect("temp dir exists");
    let path = dir.join(name);
    std::fs::write(&path, contents).expect("temp file written");
    path
}

const LINE_FAN: &str = r#"{"name":"line","dim":1,"rays":[[1],[-1]],"max_cones":[[0],[1]]}"#;

#[test]
fn validate_accepts_builtin_fan() {
    let out = torix(&["validate", "--fan", "builtin:P2"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    let doc = json(&out);
    assert_eq!(doc["projective"], serde_json::json!(true));
    let checks = doc["checks"].as_array().expect("checks array");
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["pass"] == serde_json::json!(true)));
    assert!(doc["ample_basis"].is_array());
}

#[test]
fn validate_rejects_incomplete_fan() {
    let path = tmp_file("halfline.json", r#"{"dim":1,"rays":[[1]],"max_cones":[[0]]}"#);
    let out = torix(&["validate", "--fan", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let doc = json(&out);
    assert_eq!(doc["projective"], serde_json::json!(false));
    let checks = doc["checks"].as_array().expect("checks array");
    assert!(
        checks
            .iter()
            .any(|c| c["name"] == serde_json::json!("complete")
                && c["pass"] == serde_json::json!(false)),
        "completeness check should fail: {doc:#}"
    );
}

#[test]
fn validate_rejects_malformed_document() {
    let path = tmp_file("garbage.json", "{ not json");
    let out = torix(&["validate", "--fan", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr_str(&out).contains("error:"));
}

#[test]
fn describe_reports_structure_sections_and_mobius() {
    let out =
        torix(&["describe", "--fan", "builtin:P1xP1", "--sections", "--mobius"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    let doc = json(&out);
    assert_eq!(doc["dim"], serde_json::json!(2));
    assert_eq!(doc["picard_rank"], serde_json::json!(2));
    assert_eq!(doc["default_direction"], serde_json::json!([1, 1, 1, 1]));
    assert_eq!(doc["anticanonical_class"], serde_json::json!([2, 2]));

    // one monomial basis per ample basis class
    let sections = doc["sections"].as_array().expect("sections array");
    assert_eq!(sections.len(), 2);
    assert!(sections.iter().all(|m| !m.as_array().expect("monomials").is_empty()));

    // the local table of the two crossed lines: μ(∅)=1, μ of either pair of
    // opposite rays = −1, μ of all four rays = 1
    let table = doc["mobius_table"].as_array().expect("mobius table");
    let entry = |rays: &[u64]| {
        table
            .iter()
            .find(|e| e["rays"] == serde_json::json!(rays))
            .unwrap_or_else(|| panic!("missing table entry {rays:?}"))["value"]
            .clone()
    };
    assert_eq!(entry(&[]), serde_json::json!(1));
    assert_eq!(entry(&[0, 1]), serde_json::json!(-1));
    assert_eq!(entry(&[2, 3]), serde_json::json!(-1));
    assert_eq!(entry(&[0, 1, 2, 3]), serde_json::json!(1));
    assert_eq!(table.len(), 4);
}

#[test]
fn count_unit_window_on_line_is_exact() {
    let out = torix(&["count", "--fan", "builtin:P1"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    assert_eq!(
        stdout_str(&out),
        "B,torsor_count,torus_count,boundary_count,rational_count,distinct_embeddings\n\
         1,8,4,4,4,4\n"
    );
}

#[test]
fn count_honors_region_document() {
    // heights in [1, 10) on the line: 224 pairs, 112 rational points, the four
    // axis pairs sit on the toric boundary
    let region = tmp_file(
        "line_decade.json",
        r#"[[{"divisor":[1,0],"min":"log(1)","max":"log(10)"}]]"#,
    );
    let out = torix(&["count", "--fan", "builtin:P1", "--region", region.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    assert_eq!(
        stdout_str(&out),
        "B,torsor_count,torus_count,boundary_count,rational_count,distinct_embeddings\n\
         1,224,220,4,112,112\n"
    );
}

#[test]
fn count_closed_window_with_exact_boundary() {
    // the degenerate closed window H = 1 keeps exactly the eight unit pairs
    let region = tmp_file(
        "line_point.json",
        r#"[[{"divisor":[1,0],"min":"log(1)","max":"log(1)","max_inclusive":true}]]"#,
    );
    let out = torix(&[
        "count",
        "--fan",
        "builtin:P1",
        "--region",
        region.to_str().unwrap(),
        "--exact-boundary",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    assert_eq!(
        stdout_str(&out),
        "B,torsor_count,torus_count,boundary_count,rational_count,distinct_embeddings\n\
         1,8,4,4,4,4\n"
    );
}

#[test]
fn count_writes_report_to_file() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let out_path = dir.join("p1_count.csv");
    let _ = std::fs::remove_file(&out_path);
    let out = torix(&["count", "--fan", "builtin:P1", "--out", out_path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    assert_eq!(stdout_str(&out), "", "report goes to the file, not stdout");
    let text = std::fs::read_to_string(&out_path).expect("report file");
    assert!(text.ends_with("1,8,4,4,4,4\n"));
}

#[test]
fn scaling_a_file_fan_requires_a_direction() {
    let path = tmp_file("line_fan.json", LINE_FAN);
    let out = torix(&["count", "--fan", path.to_str().unwrap(), "--B", "2"]);
    assert_eq!(code(&out), 1);
    assert!(stderr_str(&out).contains("--u is required"), "stderr: {}", stderr_str(&out));

    // an explicit direction unblocks the same run
    let out = torix(&["count", "--fan", path.to_str().unwrap(), "--B", "2", "--u", "1,1"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
}

#[test]
fn predict_line_reports_exact_density_and_growth() {
    let out = torix(&[
        "predict",
        "--fan",
        "builtin:P1",
        "--samples",
        "20000",
        "--seed",
        "0",
        "--pmax",
        "2000",
        "--B",
        "64",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    let doc = json(&out);

    // the unit window has closed-form class measure 3/2, found exactly
    let nu = doc["nu"]["value"].as_f64().expect("nu value");
    assert!((nu - 1.5).abs() < 1e-12, "nu = {nu}");
    assert_eq!(doc["nu"]["sigma"].as_f64(), Some(0.0));

    assert_eq!(doc["growth_exponent"], serde_json::json!("2"));
    assert_eq!(doc["min_pairing"], serde_json::json!("1"));
    assert_eq!(doc["f_min"].as_f64(), Some(2.0));
    let euler = &doc["euler_product"];
    assert!(euler["value"].as_f64().expect("euler value") > 0.0);
    let tail = euler["tail"].as_array().expect("tail");
    assert!(tail[0].as_f64().unwrap() <= 1.0 && 1.0 <= tail[1].as_f64().unwrap());

    // N(B) ≈ (6/ζ(2))·B² = 14940.4… at B = 64; 20k samples land well inside 10%
    let rows = doc["predictions"].as_array().expect("predictions");
    assert_eq!(rows.len(), 1);
    let p = rows[0]["prediction"].as_f64().expect("prediction");
    let truth = 6.0 * 4096.0 / (std::f64::consts::PI * std::f64::consts::PI / 6.0);
    assert!((p / truth - 1.0).abs() < 0.10, "prediction {p} vs {truth}");
    let iv = rows[0]["interval"].as_array().expect("interval");
    assert!(iv[0].as_f64().unwrap() < p && p < iv[1].as_f64().unwrap());
}

#[test]
fn compare_emits_csv_with_sane_ratios() {
    let out = torix(&[
        "compare", "--fan", "builtin:P1", "--B", "8,16", "--samples", "20000", "--pmax", "2000",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some(
            "B,rational_count,torus_count,boundary_count,prediction,prediction_lo,\
             prediction_hi,ratio,residual_scale"
        )
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert_eq!(row.len(), 9);
        let ratio: f64 = row[7].parse().expect("ratio");
        assert!((ratio - 1.0).abs() < 0.5, "ratio {ratio} far from 1");
    }
    // residual scale shrinks as B grows
    let r0: f64 = rows[0][8].parse().unwrap();
    let r1: f64 = rows[1][8].parse().unwrap();
    assert!(r1 < r0);
}

#[test]
fn compare_reports_are_byte_deterministic() {
    let args =
        ["compare", "--fan", "builtin:P1", "--B", "2,4,8", "--samples", "5000", "--seed", "7",
         "--pmax", "500"];
    let one = torix(&[&args[..], &["--threads", "1"]].concat());
    let again = torix(&[&args[..], &["--threads", "1"]].concat());
    let two = torix(&[&args[..], &["--threads", "2"]].concat());
    let via_env = torix_env(&args, "TORIX_THREADS", "4");
    assert_eq!(code(&one), 0, "stderr: {}", stderr_str(&one));
    assert_eq!(stdout_str(&one), stdout_str(&again), "same run twice");
    assert_eq!(stdout_str(&one), stdout_str(&two), "1 vs 2 worker threads");
    assert_eq!(stdout_str(&one), stdout_str(&via_env), "threads from the environment");
}

#[test]
fn invalid_configurations_exit_with_code_one() {
    let cases: &[&[&str]] = &[
        &["count", "--fan", "builtin:P1", "--B", "4,2"],
        &["count", "--fan", "builtin:P1", "--B", "0.5"],
        &["count", "--fan", "builtin:P1", "--B", ""],
        &["compare", "--fan", "builtin:P1", "--samples", "10"],
        &["compare", "--fan", "builtin:P1", "--pmax", "5"],
        &["count", "--fan", "builtin:P1", "--tol", "1.5"],
        &["count", "--fan", "/no/such/fan.json"],
        &["count", "--fan", "builtin:P99"],
        &["predict", "--fan", "builtin:P1", "--u", "1,banana"],
        &["compare", "--fan", "builtin:P1", "--threads", "0"],
    ];
    for args in cases {
        let out = torix(args);
        assert_eq!(code(&out), 1, "args {args:?}, stderr: {}", stderr_str(&out));
    }
}

#[test]
fn help_exits_zero_and_unknown_subcommand_fails() {
    let out = torix(&["--help"]);
    assert_eq!(code(&out), 0);
    let out = torix(&["frobnicate"]);
    assert_eq!(code(&out), 1);
}
