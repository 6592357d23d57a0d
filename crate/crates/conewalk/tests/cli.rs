//! End-to-end runs of the compiled binary.

use std::path::Path;
use std::process::Command;

fn conewalk(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_conewalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

const FOUR_SOLUTIONS: &str = r#"
command = "four-solutions"
seed = 7

[domain]
kind = "interval"
n = 128

[problem]
p = 2.0
catalog = "saturating"
lambda_factor_of_lambda2 = 1.5
delta = 1.0
"#;

#[test]
fn four_solutions_run_produces_the_full_artifact_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FOUR_SOLUTIONS);
    let out = dir.path().join("out");
    let out_s = out.display().to_string();

    let res = conewalk(&["four-solutions", "--config", &cfg, "--out", &out_s, "--trace"]);
    assert!(
        res.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&res.stderr)
    );

    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    for needle in [
        "command=four-solutions",
        "seed=7",
        "u0_sign=zero",
        "u1_sign=negative",
        "u2_sign=positive",
        "u3_sign=sign-changing",
        "cert_alpha1=satisfied",
        "cert_beta2=satisfied",
        "hypotheses=ok",
    ] {
        assert!(summary.contains(needle), "missing `{needle}` in:\n{summary}");
    }
    for file in [
        "solution_u0.csv",
        "solution_u1.csv",
        "solution_u2.csv",
        "solution_u3.csv",
        "certificate_alpha1.txt",
        "certificate_beta1.txt",
        "certificate_alpha2.txt",
        "certificate_beta2.txt",
        "trace_levels.csv",
    ] {
        assert!(out.join(file).exists(), "missing artifact {file}");
    }
    let trace = std::fs::read_to_string(out.join("trace_levels.csv")).unwrap();
    assert!(trace.starts_with("iter,level\n"));
}

#[test]
fn identical_config_and_seed_reproduce_the_summary_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FOUR_SOLUTIONS);
    let mut summaries = Vec::new();
    for round in 0..2 {
        let out = dir.path().join(format!("out{round}"));
        let out_s = out.display().to_string();
        let res = conewalk(&["four-solutions", "--config", &cfg, "--out", &out_s]);
        assert!(res.status.success());
        summaries.push(std::fs::read(out.join("summary.txt")).unwrap());
    }
    assert_eq!(summaries[0], summaries[1]);
}

#[test]
fn check_cones_emits_certificates_without_solving() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
        [domain]
        kind = "interval"
        n = 128

        [problem]
        p = 2.0
        catalog = "saturating"
        lambda = 60.0
        delta = 1.0
        "#,
    );
    let out = dir.path().join("out");
    let out_s = out.display().to_string();
    let res = conewalk(&["check-cones", "--config", &cfg, "--out", &out_s]);
    assert!(
        res.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&res.stderr)
    );
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("invariance=ok"), "{summary}");
    assert!(out.join("certificate_alpha2.txt").exists());
    assert!(!out.join("solution_u1.csv").exists());
}

#[test]
fn missing_config_file_names_the_problem_and_exits_nonzero() {
    let res = conewalk(&["eigen", "--config", "/nonexistent/run.toml"]);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("/nonexistent/run.toml"), "{stderr}");
}

#[test]
fn bad_field_value_is_reported_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
        [domain]
        kind = "hexagon"
        n = 64
        [problem]
        p = 2.0
        catalog = "linear"
        lambda = 1.0
        "#,
    );
    let res = conewalk(&["eigen", "--config", &cfg]);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("domain.kind"), "{stderr}");
}

#[test]
fn stage_failures_carry_the_stage_tag() {
    let dir = tempfile::tempdir().unwrap();
    // slope at zero below lambda_2: the ladder cannot be built
    let cfg = write_config(
        dir.path(),
        r#"
        [domain]
        kind = "interval"
        n = 64
        [problem]
        p = 2.0
        catalog = "saturating"
        lambda = 5.0
        delta = 1.0
        "#,
    );
    let out = dir.path().join("out");
    let out_s = out.display().to_string();
    let res = conewalk(&["four-solutions", "--config", &cfg, "--out", &out_s]);
    assert_eq!(res.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("ladder"), "{stderr}");
}
