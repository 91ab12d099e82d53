//! End-to-end tests of the `affine2f` binary: exit codes, output schemas,
//! determinism, and config/flag precedence.

use std::io::Write;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_affine2f"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_result(output: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&output.stdout);
    let envelope: serde_json::Value =
        serde_json::from_str(&text).unwrap_or_else(|e| panic!("bad JSON ({e}): {text}"));
    assert_eq!(envelope["schema_version"], 1);
    assert!(envelope["config_hash"].as_str().unwrap().len() == 16);
    envelope["result"].clone()
}

#[test]
fn moments_defaults_match_closed_forms() {
    let out = run(&[
        "moments",
        "--a",
        "1",
        "--b",
        "1",
        "--m",
        "0",
        "--theta",
        "1",
        "--max-order",
        "3",
    ]);
    assert!(out.status.success());
    let result = json_result(&out);
    let entries = result["entries"].as_array().unwrap();
    let get = |n: u64, p: u64| -> f64 {
        entries
            .iter()
            .find(|e| e["n"] == n && e["p"] == p)
            .map(|e| e["value"].as_f64().unwrap())
            .unwrap()
    };
    assert!((get(1, 0) - 1.0).abs() < 1e-14);
    assert!(get(0, 1).abs() < 1e-14);
    assert!((get(2, 0) - 1.5).abs() < 1e-14);
}

#[test]
fn stationary_cf_matches_gamma_law() {
    let out = run(&[
        "stationary-cf",
        "--lambda1",
        "1",
        "--lambda2",
        "0",
        "--a",
        "1",
        "--b",
        "1",
    ]);
    assert!(out.status.success());
    let result = json_result(&out);
    let modulus = result["modulus"].as_f64().unwrap();
    assert!(
        (modulus - (1.5f64).powi(-2)).abs() < 1e-6,
        "modulus {modulus}"
    );
}

#[test]
fn transform_at_time_zero_is_initial_condition() {
    let out = run(&[
        "transform",
        "--lambda1",
        "1",
        "--lambda2",
        "0",
        "--t",
        "0",
        "--y0",
        "1",
        "--x0",
        "0",
    ]);
    assert!(out.status.success());
    let result = json_result(&out);
    assert!((result["exponent_re"].as_f64().unwrap() + 1.0).abs() < 1e-15);
    assert!((result["value_re"].as_f64().unwrap() - (-1.0f64).exp()).abs() < 1e-15);
}

#[test]
fn simulate_is_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("run1.csv");
    let p2 = dir.path().join("run2.csv");
    for (p, threads) in [(&p1, "1"), (&p2, "4")] {
        let out = run(&[
            "simulate",
            "--seed",
            "7",
            "--n-paths",
            "3",
            "--t-end",
            "1",
            "--n-steps",
            "16",
            "--threads",
            threads,
            "--output",
            p.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    // identical bytes regardless of worker count
    let b1 = std::fs::read(&p1).unwrap();
    let b2 = std::fs::read(&p2).unwrap();
    assert_eq!(b1, b2);
    let text = String::from_utf8(b1).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    assert_eq!(
        lines.next().unwrap(),
        "t,path_0_y,path_0_x,path_1_y,path_1_x,path_2_y,path_2_x"
    );
    assert_eq!(lines.count(), 17);
}

#[test]
fn simulate_binary_dump_schema() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.bin");
    let out = run(&[
        "simulate",
        "--seed",
        "9",
        "--n-paths",
        "2",
        "--t-end",
        "0.5",
        "--n-steps",
        "4",
        "--format",
        "bin",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[0..4], b"A2FB");
    let n_paths = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let n_steps = u64::from_le_bytes(bytes[24..32].try_into().unwrap());
    assert_eq!((n_paths, n_steps), (2, 4));
    // header (89 bytes) + 2 matrices of n_paths * (n_steps + 1) f64s
    assert_eq!(bytes.len(), 89 + 2 * 2 * 5 * 8);
}

#[test]
fn euler_scheme_allows_alpha_below_two() {
    let out = run(&[
        "simulate",
        "--seed",
        "3",
        "--alpha",
        "1.5",
        "--n-paths",
        "2",
        "--t-end",
        "1",
        "--n-steps",
        "8",
    ]);
    assert!(out.status.success());
    let summary = String::from_utf8_lossy(&out.stderr);
    assert!(
        summary.contains("simulate: ok config="),
        "summary: {summary}"
    );
}

#[test]
fn validation_errors_exit_2() {
    let out = run(&["moments", "--a", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("a must be positive"));

    // stochastic task without a seed
    let out = run(&["simulate", "--n-paths", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));

    // exact scheme at alpha < 2
    let out = run(&[
        "simulate", "--seed", "1", "--alpha", "1.5", "--scheme", "exact",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_3() {
    let out = run(&[
        "transform",
        "--lambda1",
        "1",
        "--lambda2",
        "2",
        "--t",
        "1",
        "--tol",
        "1e-300",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerical failure"));
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.conf");
    let mut f = std::fs::File::create(&config).unwrap();
    writeln!(f, "# moments experiment\na = 2.0\nb = 1.0\nmax_order = 1").unwrap();
    drop(f);

    let out = run(&["moments", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let result = json_result(&out);
    assert_eq!(result["max_order"], 1);
    let ey = result["entries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["n"] == 1)
        .unwrap();
    assert!((ey["value"].as_f64().unwrap() - 2.0).abs() < 1e-14);

    // flag overrides the file
    let out = run(&[
        "moments",
        "--config",
        config.to_str().unwrap(),
        "--a",
        "3.0",
    ]);
    let result = json_result(&out);
    let ey = result["entries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["n"] == 1)
        .unwrap();
    assert!((ey["value"].as_f64().unwrap() - 3.0).abs() < 1e-14);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.conf");
    std::fs::write(&config, "a = 1.0\nwibble = 2\n").unwrap();
    let out = run(&["moments", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown config key"));
}

#[test]
fn density_csv_has_stable_schema() {
    let out = run(&["density", "--y0", "0", "--t", "1", "--points", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    assert_eq!(lines.next().unwrap(), "y,density");
    assert_eq!(lines.count(), 5);
}

#[test]
fn drift_check_reports_satisfied() {
    let out = run(&[
        "drift-check",
        "--c1",
        "0",
        "--grid-n",
        "20",
        "--y-max",
        "15",
        "--x-max",
        "15",
    ]);
    assert!(out.status.success());
    let result = json_result(&out);
    assert_eq!(result["satisfied"], true);
    assert!(result["max_violation"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn ergodic_and_mixing_emit_reports() {
    let out = run(&[
        "ergodic",
        "--seed",
        "5",
        "--f-n",
        "1",
        "--f-p",
        "0",
        "--t-end",
        "50",
        "--dt",
        "0.05",
        "--replicas",
        "8",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let result = json_result(&out);
    assert!((result["target"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(result["estimate"].as_f64().unwrap().is_finite());

    let out = run(&[
        "mixing",
        "--seed",
        "5",
        "--g-n",
        "1",
        "--g-p",
        "0",
        "--t-end",
        "3",
        "--points",
        "10",
        "--n-paths",
        "50",
        "--y0",
        "5",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let result = json_result(&out);
    let beta = result["beta_hat"].as_f64().unwrap();
    assert!((beta - 1.0).abs() < 0.05, "beta_hat {beta}");
}

#[test]
fn exploratory_ergodic_below_alpha_two() {
    let out = run(&[
        "ergodic",
        "--seed",
        "5",
        "--alpha",
        "1.5",
        "--t-end",
        "10",
        "--dt",
        "0.05",
        "--replicas",
        "4",
    ]);
    assert!(out.status.success());
    let result = json_result(&out);
    assert!(result["target"].is_null());
    assert!(result["pass"].is_null());
    assert!(result["note"].as_str().unwrap().contains("exploratory"));
}

#[test]
fn selftest_single_criterion_passes() {
    let out = run(&["selftest", "--only", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS criterion  2"), "output: {text}");

    let out = run(&["selftest", "--only", "99"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn negative_flag_values_parse() {
    let out = run(&["moments", "--m", "-2", "--max-order", "2"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let result = json_result(&out);
    let ex = result["entries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["n"] == 0 && e["p"] == 1)
        .unwrap();
    assert!((ex["value"].as_f64().unwrap() + 2.0).abs() < 1e-14);

    let out = run(&["transform", "--lambda2", "-1.5", "--x0", "-3", "--t", "0.5"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn threads_env_var_is_accepted() {
    let out = bin()
        .env("AFFINE2F_THREADS", "2")
        .args(["moments", "--max-order", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
}
