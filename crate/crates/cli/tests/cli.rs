//! End-to-end CLI contract: exit codes, report files, determinism.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sphericalize"))
}

fn write_config(dir: &Path, density: &str, extra: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(
        &path,
        format!(
            "[density]\n{density}\n[space]\nmesh_rel = 0.1\nr_max = 100.0\n{extra}"
        ),
    )
    .unwrap();
    path
}

#[test]
fn check_density_pass_pass_exits_zero_with_report() {
    let dir = std::env::temp_dir().join("sph_cli_pp");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(&dir, "family = \"powlog\"\nalpha = -2.0\nbeta = 0.0", "");
    let out = bin()
        .args(["check-density", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/density_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["verdict_a"], "pass");
    assert_eq!(report["verdict_b"], "pass");
    let c_a = report["c_a_hat"].as_f64().unwrap();
    assert!((c_a - 4.0).abs() < 0.05, "C_A_hat = {c_a}");
    let c_b = report["c_b_hat"].as_f64().unwrap();
    assert!((c_b - 2.0).abs() < 0.05, "C_B_hat = {c_b}");
    // the run config is captured alongside the reports
    assert!(dir.join("out/run_config.toml").exists());
}

#[test]
fn check_density_exponential_fails_a_passes_b() {
    let dir = std::env::temp_dir().join("sph_cli_exp");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(&dir, "family = \"exponential\"\nrate = 1.0", "");
    let out = bin()
        .args(["check-density", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    // fail verdicts are still a successful classification: exit 0
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/density_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["verdict_a"], "fail");
    assert_eq!(report["verdict_b"], "pass");
}

#[test]
fn check_density_log_family_passes_a_fails_b() {
    let dir = std::env::temp_dir().join("sph_cli_log");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(&dir, "family = \"powlog\"\nalpha = -1.0\nbeta = -2.0", "");
    let out = bin()
        .args(["check-density", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/density_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["verdict_a"], "pass");
    assert_eq!(report["verdict_b"], "fail");
}

#[test]
fn non_integrable_density_exits_one() {
    let dir = std::env::temp_dir().join("sph_cli_div");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(&dir, "family = \"powlog\"\nalpha = -0.5\nbeta = 0.0", "");
    let out = bin()
        .args(["check-density", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not integrable"));
}

#[test]
fn sphericalize_failing_density_needs_force() {
    let dir = std::env::temp_dir().join("sph_cli_force");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(&dir, "family = \"exponential\"\nrate = 1.0", "");
    let out = bin()
        .args(["sphericalize", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("prerequisite"));

    let out = bin()
        .args(["sphericalize", "--force", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("out/sphere_summary.json").exists());
}

#[test]
fn sphericalize_emits_summary_and_distance_field() {
    let dir = std::env::temp_dir().join("sph_cli_sum");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(&dir, "family = \"powlog\"\nalpha = -2.0\nbeta = 0.0", "");
    let out = bin()
        .args(["sphericalize", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/sphere_summary.json")).unwrap())
            .unwrap();
    assert!(summary["mu_rho_total"].as_f64().unwrap().is_finite());
    assert!(summary["diam_rho_hat"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(dir.join("out/infinity_distances.csv")).unwrap();
    assert!(csv.starts_with("node_id,radial,lower,point,upper"));
    assert!(csv.lines().count() > 100);
}

#[test]
fn reports_are_deterministic_under_fixed_seed() {
    let dir = std::env::temp_dir().join("sph_cli_det");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(
        &dir,
        "family = \"powlog\"\nalpha = -2.0\nbeta = 0.0",
        "[run]\nseed = 11\nsamples = 60\n",
    );
    for sub in ["a", "b"] {
        let out = bin()
            .args(["verify", "uniformity", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.join(sub))
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read_to_string(dir.join("a/uniformity_pairs.csv")).unwrap();
    let b = std::fs::read_to_string(dir.join("b/uniformity_pairs.csv")).unwrap();
    assert_eq!(a, b, "fixed seed must give bit-identical reports");
}

#[test]
fn verify_doubling_holds_for_admissible_density() {
    let dir = std::env::temp_dir().join("sph_cli_dbl");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(
        &dir,
        "family = \"powlog\"\nalpha = -2.0\nbeta = 0.0",
        "[run]\nseed = 9\nsamples = 200\n",
    );
    let out = bin()
        .args(["verify", "doubling", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let cc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/condition_c.json")).unwrap())
            .unwrap();
    assert_eq!(cc["verdict"], "pass");
    let verdict: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("out/doubling_verdict.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(verdict["verdict"], "holds");
    // ratio-vs-radius plot data with a header row
    let trend = std::fs::read_to_string(dir.join("out/infinity_doubling_trend.csv")).unwrap();
    assert!(trend.starts_with("radius,ratio"));
}

#[test]
fn verify_counterexamples_produces_refutations() {
    let dir = std::env::temp_dir().join("sph_cli_cex");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(
        &dir,
        "family = \"powlog\"\nalpha = -2.0\nbeta = 0.0",
        "[run]\nseed = 5\nsamples = 120\n",
    );
    let out = bin()
        .args(["verify", "counterexamples", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/counterexamples.json")).unwrap())
            .unwrap();
    assert_eq!(report["oscillation_all_refuted"], true);
    assert_eq!(report["tail_domination_exceeds_ladder"], true);
    assert_eq!(report["condition_c_verdict"], "fail");
}
