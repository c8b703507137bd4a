//! End-to-end checks of the CLI surfaces: file formats, JSON outputs and
//! byte-level reproducibility of experiment runs across worker counts.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rce-ustat"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawn rce-ustat");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn catalog_csv_lists_classes() {
    let text = run_ok(bin().args(["catalog", "--max-rows", "2", "--max-cols", "2", "--format", "csv"]));
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "r,c,edges_hex,aut,connected,class_id");
    // header + 20 classes up to (2,2)
    assert_eq!(text.lines().count(), 21);
    assert!(text.lines().any(|l| l == "2,2,f,4,true,6"));
}

#[test]
fn simulate_ustat_test_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let y_path = dir.path().join("y.csv");
    run_ok(bin().args([
        "simulate",
        "--model",
        "poisson_bedd",
        "--lambda",
        "1",
        "--f",
        "power:1",
        "--g",
        "power:2.414213",
        "--m",
        "24",
        "--n",
        "20",
        "--seed",
        "7",
        "--out",
        y_path.to_str().unwrap(),
    ]));
    assert!(y_path.exists());
    let sidecar = dir.path().join("y.meta.json");
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sidecar).unwrap()).unwrap();
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["model"]["variant"], "poisson_bedd");

    let fast: serde_json::Value = serde_json::from_str(&run_ok(bin().args([
        "ustat", "--kernel", "h1", "--in", y_path.to_str().unwrap(), "--path", "fast",
    ])))
    .unwrap();
    let exact: serde_json::Value = serde_json::from_str(&run_ok(bin().args([
        "ustat", "--kernel", "h1", "--in", y_path.to_str().unwrap(), "--path", "exact",
    ])))
    .unwrap();
    let (vf, ve) = (fast["value"].as_f64().unwrap(), exact["value"].as_f64().unwrap());
    assert!((vf - ve).abs() <= 1e-10 * ve.abs().max(1.0));
    assert_eq!(fast["path"], "fast");

    let t: serde_json::Value = serde_json::from_str(&run_ok(bin().args([
        "test", "--stat", "ZB", "--in", y_path.to_str().unwrap(), "--lambda", "1.0",
    ])))
    .unwrap();
    assert!(t["two_sided_p"].as_f64().unwrap() <= 1.0);
    assert!(t["variance_used"].as_f64().unwrap() > 0.0);
}

#[test]
fn support_cli_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    run_ok(bin().args([
        "support",
        "--model",
        "overdispersed_poisson_bedd",
        "--lambda",
        "1",
        "--f",
        "power:1",
        "--g",
        "power:1",
        "--dispersion",
        "0",
        "--kernel",
        "h6",
        "--alpha",
        "0.01",
        "--pilot",
        "20000",
        "--seed",
        "5",
        "--out",
        report_path.to_str().unwrap(),
    ]));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["principal_degree"], 2);
    assert_eq!(report["support_classes"][0]["edges_hex"], "1");
}

#[test]
fn verify_cli_prints_pass_lines() {
    let text = run_ok(bin().args(["verify", "--seed", "3", "--out-dir"]).arg(
        tempfile::tempdir().unwrap().path().to_str().unwrap(),
    ));
    assert!(text.lines().all(|l| l.starts_with("PASS")));
    assert!(text.lines().count() >= 15);
}

fn run_qq_into(dir: &Path, threads: &str) {
    let mut cmd = bin();
    cmd.env("RAYON_NUM_THREADS", threads);
    run_ok(cmd.args([
        "qq",
        "--stat",
        "ZA",
        "--model",
        "gaussian_iid",
        "--sizes",
        "16,32",
        "--replicates",
        "40",
        "--seed",
        "9",
        "--out-dir",
        dir.to_str().unwrap(),
    ]));
}

#[test]
fn qq_outputs_reproduce_byte_for_byte() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    run_qq_into(d1.path(), "1");
    run_qq_into(d2.path(), "2");
    let a = std::fs::read(d1.path().join("qq.csv")).unwrap();
    let b = std::fs::read(d2.path().join("qq.csv")).unwrap();
    assert_eq!(a, b, "qq.csv must not depend on worker count");

    // The manifest pins config, seed rule and the output list.
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d1.path().join("qq.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["schema"], 1);
    assert_eq!(manifest["outputs"][0], "qq.csv");
    assert!(manifest["seed_rule"].as_str().unwrap().contains("splitmix64"));
}

#[test]
fn config_file_drives_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "schema": 1,
        "experiment": "rate",
        "model": {"variant": "gaussian_iid"},
        "kernel": "h1",
        "sizes": [16, 32, 64],
        "replicates": 120,
        "seed": 4,
        "out_dir": dir.path().join("out"),
    });
    let cfg_path = dir.path().join("rate.json");
    std::fs::write(&cfg_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    let text = run_ok(bin().args(["rate", "--config", cfg_path.to_str().unwrap()]));
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    let slope = report["slope"].as_f64().unwrap();
    assert!(slope < -1.0, "slope {slope}");
    assert!(dir.path().join("out/rate.json").exists());
    assert!(dir.path().join("out/rate.manifest.json").exists());

    // Mismatched experiment kind is rejected.
    let out = bin()
        .args(["qq", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
