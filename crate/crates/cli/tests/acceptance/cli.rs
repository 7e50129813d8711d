use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BASE: &str = r#"
[geometry]
l1 = 0.75
l2 = 1.25
l3 = 1.10

[test_pose]
q_deg = [0.0, 60.0, -45.0]
force = [0.0, 0.29, -0.96]
"#;

pub const TEST_PLAN: &str = r#"
[plan]
label = "test"
poses_deg = [[60.0, -45.0, -73.19130837379315]]
"#;

pub fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, format!("{BASE}{extra}")).unwrap();
    path
}

pub fn stiffcal(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stiffcal"));
    cmd.args(args).env_remove("STIFFCAL_THREADS");
    if let Some(t) = threads {
        cmd.env("STIFFCAL_THREADS", t);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_fields(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn evaluate_test_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TEST_PLAN);
    let out = stiffcal(&["evaluate", "--config", cfg.to_str().unwrap(), "--format", "csv"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("label,perf_sigma2,q2_deg,q3_deg,alpha_deg,dk1_sigma,dk2_sigma,dk3_sigma\n"));
    let row = &csv_fields(&text)[0];
    let perf: f64 = row[1].parse().unwrap();
    assert!((perf - 3.0).abs() < 1e-9, "{perf}");
    let dk: Vec<f64> = row[5..8].iter().map(|s| s.parse().unwrap()).collect();
    for (got, want) in dk.iter().zip([1.22, 0.70, 2.19]) {
        assert!((got / want - 1.0).abs() < 0.05, "{dk:?}");
    }
}

#[test]
fn evaluate_writes_table_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TEST_PLAN);
    let report = dir.path().join("report.txt");
    let out = stiffcal(&["evaluate", "--config", cfg.to_str().unwrap(), "--out", report.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(report).unwrap();
    assert!(text.contains("3.0000") && text.contains("perf[σ²]"), "{text}");
}

#[test]
fn vertical_forces_leave_joint_one_unobservable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[plan]\nposes_deg = [[10.0, 20.0, 90.0], [40.0, -70.0, 90.0], [-30.0, 50.0, 90.0]]\n");
    let out = stiffcal(&["evaluate", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("joint 1"), "{}", stderr(&out));
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let cfg = cfg.to_str().unwrap();

    let out = stiffcal(&["optimize", "--config", cfg, "--m", "0"], None);
    assert_eq!(out.status.code(), Some(1));

    let out = stiffcal(&["evaluate", "--config", cfg], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--plan"));

    let out = stiffcal(&["evaluate", "--config", "/nonexistent/run.toml"], None);
    assert_eq!(out.status.code(), Some(1));

    let bad = write_config(dir.path(), "[optimizer]\nstarts = 4\nrestarts = 2\n");
    let out = stiffcal(&["optimize", "--config", bad.to_str().unwrap(), "--m", "1"], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("restarts"), "{}", stderr(&out));

    let neg = write_config(dir.path(), "[plan]\nforce_magnitude = -2.0\nposes_deg = [[1.0, 2.0, 3.0]]\n");
    let out = stiffcal(&["evaluate", "--config", neg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("plan.force_magnitude"), "{}", stderr(&out));

    assert_eq!(stiffcal(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(stiffcal(&["simulate", "--config", cfg, "--trials", "10"], None).status.code(), Some(1));
    assert_eq!(stiffcal(&["evaluate", "--config", cfg], Some("zero")).status.code(), Some(1));
    assert_eq!(stiffcal(&["--help"], None).status.code(), Some(0));
}

#[test]
fn optimize_then_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[plan]\nforce_magnitude = 1.0\n");
    let cfg = cfg.to_str().unwrap();
    let plan = dir.path().join("opt2.csv");
    let out = stiffcal(&["optimize", "--config", cfg, "--m", "2", "--format", "csv", "--out", plan.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let written = std::fs::read_to_string(&plan).unwrap();
    let optimized: f64 = csv_fields(&written)[0][1].parse().unwrap();
    assert!(optimized <= 0.80 * 1.02, "{optimized}");
    assert_eq!(csv_fields(&written).len(), 2);

    let out = stiffcal(&["evaluate", "--config", cfg, "--plan", plan.to_str().unwrap(), "--format", "csv"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let evaluated: f64 = csv_fields(&stdout(&out))[0][1].parse().unwrap();
    assert!((evaluated - optimized).abs() < 1e-9, "{evaluated} vs {optimized}");
}

#[test]
fn simulate_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TEST_PLAN);
    let cfg = cfg.to_str().unwrap();
    let args = ["simulate", "--config", cfg, "--trials", "100000", "--sigma", "1e-6", "--seed", "3"];
    let a = stiffcal(&args, None);
    let b = stiffcal(&args, None);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let ot_line = text.lines().find(|l| l.starts_with("O_t/sigma^2")).unwrap();
    let empirical: f64 = ot_line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((empirical / 3.0 - 1.0).abs() < 0.03, "{ot_line}");
    assert!(text.contains("Gaussian"));
}

#[test]
fn noise_free_simulation_has_zero_covariance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TEST_PLAN);
    let out = stiffcal(&["simulate", "--config", cfg.to_str().unwrap(), "--trials", "200", "--sigma", "0", "--format", "csv"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for row in csv_fields(&stdout(&out)) {
        let empirical: f64 = row[1].parse().unwrap();
        if row[0].starts_with("cov_") {
            assert!(empirical.abs() < 1e-30, "{row:?}");
        } else if row[0].starts_with("bias_") {
            assert!(empirical.abs() < 1e-18, "{row:?}");
        }
    }
}

#[test]
fn reference_table_report() {
    let out = stiffcal(&["reproduce-table1"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    for label in ["Test Conf.", "Opt.1 Conf.", "2xOpt.1 Conf.", "Opt.4 Conf.", "Opt.4 (search)"] {
        assert!(text.contains(label), "missing {label}");
    }
    assert!(text.contains("matches q3 = -45"));
    assert!(text.contains("cells within tolerance"));

    let out = stiffcal(&["reproduce-table1", "--format", "csv", "--tolerance-perf", "0.01"], None);
    assert_eq!(out.status.code(), Some(0));
    let labels: std::collections::BTreeSet<String> = csv_fields(&stdout(&out)).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(labels.len(), 15);
}
