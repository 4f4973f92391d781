use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pcqm::estimators::{pollard, write_sample_csv, DistanceSample};

fn pcqm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcqm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write_sample(dir: &Path, name: &str, s: &DistanceSample<f64>) -> String {
    let path = dir.join(name);
    write_sample_csv(s, std::fs::File::create(&path).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn estimate_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let d = [1.2, 3.4, 2.2, 5.0, 0.7, 2.9, 4.4, 1.1];
    let s = DistanceSample::complete(&d, 4, 1).unwrap();
    let input = write_sample(dir.path(), "s.csv", &s);
    let out = pcqm(&["estimate", "--input", &input, "--estimator", "pollard"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    let value: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(value, pollard(&s).unwrap().lambda_hat);
}

#[test]
fn estimate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let s = DistanceSample::from_distances(&[1.0, 2.0, 30.0, 4.0, 5.0, 6.0, 7.0, 40.0], 4, 1, 10.0).unwrap();
    let input = write_sample(dir.path(), "c.csv", &s);
    let out = pcqm(&["estimate", "--input", &input, "--radius", "10", "--estimator", "morisita-censored", "--ell", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = pcqm(&["estimate", "--input", &input, "--radius", "10", "--estimator", "all"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 8, "{text}");

    // Censored rows without a search radius are malformed input.
    let out = pcqm(&["estimate", "--input", &input]);
    assert_eq!(out.status.code(), Some(1));

    let all = DistanceSample::from_distances(&[20.0; 8], 4, 1, 10.0).unwrap();
    let input = write_sample(dir.path(), "all.csv", &all);
    let out = pcqm(&["estimate", "--input", &input, "--radius", "10", "--estimator", "pollard-censored"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("censored"));

    let out = pcqm(&["estimate", "--input", "/nonexistent.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn estimate_all_on_complete_data_uses_complete_set() {
    let dir = tempfile::tempdir().unwrap();
    let s = DistanceSample::complete(&[1.2, 3.4, 2.2, 5.0, 0.7, 2.9, 4.4, 1.1], 4, 2).unwrap();
    let input = write_sample(dir.path(), "s.csv", &s);
    let out = pcqm(&["estimate", "--input", &input, "--ell", "2"]);
    assert!(out.status.success());
    assert!(stdout(&out).lines().skip(1).any(|l| l.starts_with("shen-k,")));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("simulate_csr.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = pcqm(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["pattern.csv", "pattern.csv.window.json", "sample.csv", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    // Rerunning from the manifest reproduces the outputs.
    let c = dir.path().join("c");
    let manifest = a.join("manifest.json");
    let o = pcqm(&["simulate", "--config", manifest.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(a.join("sample.csv")).unwrap(), std::fs::read(c.join("sample.csv")).unwrap());
}

#[test]
fn simulate_thomas_records_intensity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("simulate_thomas.json");
    let o = pcqm(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let intensity = manifest["intensity"].as_f64().unwrap();
    assert!((intensity - 0.05).abs() < 1e-12);
}

#[test]
fn oversized_buffer_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"process":{"kind":"csr","lambda":0.05},"window":{"x_min":0,"y_min":0,"x_max":30,"y_max":30},"ell":1,"radius":10,"buffer":20,"seed":1}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = pcqm(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn benchmark_dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("fig1_sigma_sweep.json");
    let o = pcqm(&["benchmark", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--dry-run"]);
    assert!(o.status.success());
    // 10 σ values × 2 orders, 2 patterns × 100 designs each.
    assert!(stdout(&o).contains("20 scenarios, 4000 cells"), "{}", stdout(&o));
    assert!(!out.exists());
}

#[test]
fn benchmark_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("table1_row_csr050_l1.json");
    let o = pcqm(&["benchmark", "--config", cfg.to_str().unwrap(), "--estimator", "nope", "--dry-run"]);
    assert_eq!(o.status.code(), Some(1));
    let o = pcqm(&[
        "benchmark", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--estimator",
        "dahdouh-koedam", "--ell", "2",
    ]);
    assert!(o.status.success());
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let pooled: Vec<&str> = summary.lines().find(|l| l.contains(",all,")).unwrap().split(',').collect();
    assert_eq!(&pooled[4..7], ["", "", ""]);
    assert_eq!(&pooled[8..], ["0", "200"]);
}

#[test]
fn diagnose_grid_and_edge_cells() {
    let grid = configs().join("sm_subset_grid.json");
    let o = pcqm(&["diagnose", "--config", grid.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains(",imputation-smaller,")).count(), 216);

    let o = pcqm(&["diagnose", "--ell", "2", "--lambda", "0.05", "--k", "0.5,2", "--radius", "10", "--u", "0"]);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows[0].contains("second-moment limit requires k>1"));
    assert!(rows[1].contains(",0,0,0,no-bias"), "{}", rows[1]);
}
