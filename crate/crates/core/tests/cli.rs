//! End-to-end runs of the command layer and the `lcgp` binary.

use std::path::Path;
use std::process::Command;

use lcgp::cli::config::{BaselineMethod, BaselineSpec};
use lcgp::cli::presets::preset;
use lcgp::cli::{cmd_analyze, cmd_compare, cmd_simulate, AnalysisConfig};
use lcgp::kernels::KernelSpec;
use tempfile::tempdir;

fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(|f| f.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

/// Points a preset at CSV files instead of its built-in simulation.
fn from_csv(mut config: AnalysisConfig, noisy: &Path, clean: Option<&Path>) -> AnalysisConfig {
    config.input.simulate = None;
    config.input.csv = Some(noisy.to_path_buf());
    config.input.truth_csv = clean.map(Path::to_path_buf);
    config
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_then_analyze_from_csv() {
    let dir = tempdir().unwrap();
    let mut config = preset("chirp-paper").unwrap();
    config.seed = 4;
    let sim_dir = dir.path().join("sim");
    let files = cmd_simulate(&config, &sim_dir).unwrap();
    for f in &files {
        assert_eq!(read_rows(f).1.len(), 251, "{}", f.display());
    }

    let direct = cmd_analyze(&config, &dir.path().join("direct")).unwrap();
    let csv_config = from_csv(config, &sim_dir.join("noisy.csv"), Some(&sim_dir.join("clean.csv")));
    let out = dir.path().join("from_csv");
    let report = cmd_analyze(&csv_config, &out).unwrap();
    // CSV values are written in shortest round-trip form, so the fits agree exactly
    assert_eq!(report.fit.regression.posterior_mean, direct.fit.regression.posterior_mean);

    let (header, rows) = read_rows(&out.join("posterior_mean.csv"));
    assert_eq!(header, ["time", "mean", "variance"]);
    assert_eq!(rows.len(), 251);

    let (header, rows) = read_rows(&out.join("state_posterior.csv"));
    assert_eq!(header.len(), 31);
    assert_eq!(header[0], "segment_time");
    assert_eq!(header[1], "p_0.1");
    assert_eq!(rows.len(), report.fit.plan.len());
    for row in &rows {
        let total: f64 = row[1..].iter().sum();
        assert!((total - 1.0).abs() <= 1e-9);
    }

    let (_, rows) = read_rows(&out.join("point_estimates.csv"));
    assert_eq!(rows.len(), report.fit.plan.len());

    let bytes = std::fs::read(out.join("covariance.bin")).unwrap();
    assert_eq!(bytes.len(), 8 + 251 * 251 * 8);
    assert_eq!(u64::from_le_bytes(bytes[..8].try_into().unwrap()), 251);

    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["n_samples"], 251);
    assert_eq!(summary["n_states"], 30);
    assert_eq!(summary["estimator"], "mean");
}

#[test]
fn two_state_simulation_has_expected_length() {
    let dir = tempdir().unwrap();
    let files = cmd_simulate(&preset("twostate-paper").unwrap(), dir.path()).unwrap();
    let (_, truth) = read_rows(&files[2]);
    assert_eq!(truth.len(), 501);
    assert!(truth.iter().all(|r| r[1] == 0.0 || r[1] == 1.0));
    assert!(truth.iter().any(|r| r[1] == 1.0));
}

#[test]
fn simulate_output_is_byte_identical_across_runs() {
    let dir = tempdir().unwrap();
    let config = preset("twostate-paper").unwrap();
    let a = cmd_simulate(&config, &dir.path().join("a")).unwrap();
    let b = cmd_simulate(&config, &dir.path().join("b")).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
}

#[test]
fn summary_differs_only_in_runtime() {
    let dir = tempdir().unwrap();
    let config = preset("twostate-paper").unwrap();
    cmd_analyze(&config, &dir.path().join("a")).unwrap();
    cmd_analyze(&config, &dir.path().join("b")).unwrap();
    let mut a = json(&dir.path().join("a/summary.json"));
    let mut b = json(&dir.path().join("b/summary.json"));
    assert!(a["runtime_s"].as_f64().unwrap() >= 0.0);
    a.as_object_mut().unwrap().remove("runtime_s");
    b.as_object_mut().unwrap().remove("runtime_s");
    assert_eq!(a, b);
}

#[test]
fn compare_without_truth_omits_correlations() {
    let dir = tempdir().unwrap();
    let base = preset("twostate-paper").unwrap();
    let sim_dir = dir.path().join("sim");
    cmd_simulate(&base, &sim_dir).unwrap();

    let mut config = from_csv(base, &sim_dir.join("noisy.csv"), None);
    let kernel = KernelSpec::squared_exponential(0.2);
    config.baselines = vec![
        BaselineSpec {
            name: "se_a".into(),
            method: BaselineMethod::Fixed { kernel: kernel.clone() },
        },
        BaselineSpec {
            name: "se_b".into(),
            method: BaselineMethod::Fixed { kernel },
        },
    ];
    let out = dir.path().join("cmp");
    let comparison = cmd_compare(&config, &out).unwrap();
    assert!(!comparison.truth_available);
    assert_eq!(comparison.methods.len(), 3);
    assert!(comparison.methods.iter().all(|m| m.correlation.is_none()));
    assert_eq!(comparison.methods[1].mean, comparison.methods[2].mean);

    let report = json(&out.join("comparison.json"));
    assert_eq!(report["truth_available"], false);
    for m in report["methods"].as_array().unwrap() {
        assert!(m.get("correlation").is_none());
    }
    let a = std::fs::read_to_string(out.join("mean_1_se_a.csv")).unwrap();
    let b = std::fs::read_to_string(out.join("mean_2_se_b.csv")).unwrap();
    assert_eq!(a, b);
    assert!(out.join("mean_0_coupled.csv").exists());
}

#[test]
fn binary_runs_a_preset() {
    let dir = tempdir().unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_lcgp"))
        .args(["simulate", "--preset", "chirp-paper", "--seed", "2", "--output-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(dir.path().join("noisy.csv").exists());
}

#[test]
fn binary_reports_errors_on_one_line() {
    let dir = tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\n[windows]\nspacing_s = -1.0\nwidth_s = 0.2\n").unwrap();
    for args in [
        vec!["analyze".to_string(), "--config".into(), bad.display().to_string()],
        vec!["analyze".to_string(), "--preset".into(), "no-such-preset".into()],
        vec!["analyze".to_string()],
    ] {
        let output = Command::new(env!("CARGO_BIN_EXE_lcgp")).args(&args).output().unwrap();
        assert!(!output.status.success(), "{args:?}");
        let stderr = String::from_utf8(output.stderr).unwrap();
        assert_eq!(stderr.lines().count(), 1, "{args:?}: {stderr}");
        assert!(stderr.starts_with("error: "), "{stderr}");
    }
}
