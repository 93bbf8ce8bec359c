use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use asyco::cotrain::{read_metrics_csv, METRICS_HEADER};
use asyco::data::{gaussian_blobs, write_csv, BlobConfig};
use asyco_cli::commands::{read_noise_csv, NoiseLongRow};
use serde_json::Value;

fn asyco(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asyco")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = asyco(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Labelled source data whose candidate sets are the true labels.
fn source(dir: &Path, n: usize, classes: usize) -> PathBuf {
    let ds = gaussian_blobs(&BlobConfig {
        num_instances: n,
        dim: 6,
        num_classes: classes,
        center_scale: 2.0,
        cluster_std: 1.0,
        seed: 3,
    })
    .unwrap();
    let path = dir.join("source.csv");
    write_csv(&ds, &path).unwrap();
    path
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const QUICK: [&str; 6] = ["--epochs", "6", "--warmup", "2", "--hidden", "0"];

#[test]
fn gen_data_is_deterministic_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let src = source(dir.path(), 180, 9);
    let a = dir.path().join("a");
    let read = |f: &str| std::fs::read(a.join(f)).unwrap();
    ok(&["gen-data", "--dataset", s(&src), "--out", s(&a), "--q", "0.5", "--seed", "4"]);
    let first = (read("dataset.csv"), read("manifest.json"));
    ok(&["gen-data", "--dataset", s(&src), "--out", s(&a), "--q", "0.5", "--seed", "4"]);
    assert_eq!(first, (read("dataset.csv"), read("manifest.json")));
    let m = json(a.join("manifest.json"));
    assert_eq!(m["process"], "uniform");
    assert_eq!(m["q"], 0.5);
    assert_eq!(m["seed"], 4);
    assert!(m["mean_candidate_size"].as_f64().unwrap() > 1.0);
    assert_eq!(m["experiment"]["command"], "gen-data");

    let inst = dir.path().join("inst");
    ok(&["gen-data", "--dataset", s(&src), "--out", s(&inst), "--gen-process", "instance-dependent"]);
    let m = json(inst.join("manifest.json"));
    assert_eq!(m["process"], "instance-dependent");
    assert_eq!(m["scorer_training_log"].as_array().unwrap().len(), m["scorer_epochs"].as_u64().unwrap() as usize);
    assert_eq!(m["scorer_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn train_writes_metrics_summary_and_reproducible_config() {
    let dir = tempfile::tempdir().unwrap();
    let src = source(dir.path(), 150, 4);
    let out = dir.path().join("run");
    let mut args = vec!["train", "--mode", "asyco", "--dataset", s(&src), "--out", s(&out), "--q", "0.4"];
    args.extend(QUICK);
    let stdout = ok(&args);
    assert!(stdout.contains("final accuracy"));

    let text = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), METRICS_HEADER);
    assert_eq!(read_metrics_csv(out.join("metrics.csv")).unwrap().len(), 6);
    let summary = json(out.join("summary.json"));
    assert!(summary["final_acc"].as_f64().is_some());
    assert_eq!(summary["seed"], 1);
    assert_eq!(summary["config"]["epochs"], 6);
    assert_eq!(summary["candidates"]["q"], 0.4);

    // the echoed config alone reproduces the run
    let rerun = dir.path().join("rerun");
    ok(&["train", "--config", s(&out.join("config.txt")), "--out", s(&rerun)]);
    assert_eq!(
        std::fs::read(out.join("metrics.csv")).unwrap(),
        std::fs::read(rerun.join("metrics.csv")).unwrap()
    );
}

#[test]
fn ablation_and_baseline_modes_are_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let src = source(dir.path(), 120, 4);
    let run = |mode: &str, q: Option<&str>| {
        let out = dir.path().join(mode);
        let mut args = vec!["train", "--mode", mode, "--dataset", s(&src), "--out", s(&out)];
        if let Some(q) = q {
            args.extend(["--q", q]);
        }
        args.extend(QUICK);
        ok(&args);
        json(out.join("summary.json"))
    };
    let s1 = run("no-cotrain", Some("0.3"));
    assert_eq!(s1["mode"], "no-cotrain");
    assert!(s1["ablation"].as_str().unwrap().contains("co-training"));
    let s2 = run("supervised", None);
    assert_eq!(s2["mode"], "supervised");
    assert_eq!(s2["final_class_noise"], 0.0);
}

#[test]
fn bad_invocations_fail_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let src = source(dir.path(), 60, 3);
    let out = dir.path().join("never");
    let cases: Vec<Vec<&str>> = vec![
        vec!["train", "--dataset", s(&src), "--out", s(&out), "--learning-rate", "0.1"],
        vec!["train", "--dataset", s(&src), "--out", s(&out), "--mode", "proden"],
        vec!["train", "--dataset", s(&src), "--out", s(&out), "--gen-process", "instance-dependent", "--q", "0.3"],
        vec!["train", "--dataset", s(&src), "--out", s(&out), "--warmup", "500"],
        vec!["gen-data", "--dataset", s(&src), "--out", s(&out), "--q", "0.3", "--mode", "asyco"],
        vec!["ablation-suite", "--dataset", s(&src), "--out", s(&out), "--mode", "syco"],
        vec!["train", "--out", s(&out)],
    ];
    for args in cases {
        let res = asyco(&args);
        assert!(!res.status.success(), "{args:?} succeeded");
        assert!(!out.exists(), "{args:?} created outputs");
    }
    let missing = asyco(&["train", "--dataset", "/nonexistent.csv", "--out", s(&out)]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nonexistent"));
}

#[test]
fn numeric_faults_exit_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let src = source(dir.path(), 60, 3);
    let out = dir.path().join("fault");
    let res = asyco(&[
        "train", "--dataset", s(&src), "--out", s(&out), "--q", "0.5", "--lr", "1e300", "--momentum", "0", "--epochs", "4",
        "--warmup", "1",
    ]);
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("non-finite"), "{err}");
}

#[test]
fn ablation_suite_emits_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let src = source(dir.path(), 90, 3);
    let out = dir.path().join("suite");
    let mut args = vec!["ablation-suite", "--dataset", s(&src), "--out", s(&out), "--q", "0.3"];
    args.extend(QUICK);
    ok(&args);
    let mut r = csv::Reader::from_path(out.join("suite.csv")).unwrap();
    let headers = r.headers().unwrap().clone();
    assert!(headers.iter().any(|h| h == "mean") && headers.iter().any(|h| h == "std"));
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows.iter().filter(|r| r[0].starts_with("asyco-augs")).count(), 4);
    assert!(rows.iter().all(|r| &r[5] == "3"));
    let report = json(out.join("suite.json"));
    assert_eq!(report["cells"].as_array().unwrap().len(), 10);
}

#[test]
fn noise_report_on_nine_classes() {
    let dir = tempfile::tempdir().unwrap();
    let src = source(dir.path(), 540, 9);
    let out = dir.path().join("noise");
    let stdout = ok(&[
        "noise-report", "--dataset", s(&src), "--out", s(&out), "--q", "0.5", "--epochs", "25", "--warmup", "5", "--hidden",
        "0",
    ]);
    assert!(stdout.contains("after warm-up"));
    let rows = read_noise_csv(&out.join("noise.csv")).unwrap();
    assert_eq!(rows.len(), 25);
    let last = rows.last().unwrap();
    assert!(last.sim_noise_rate.unwrap() < last.class_noise_rate.unwrap());

    let mut r = csv::Reader::from_path(out.join("noise_long.csv")).unwrap();
    let long: Vec<NoiseLongRow> = r.deserialize().map(Result::unwrap).collect();
    assert_eq!(long.len(), 50);
    for row in &rows {
        let class = long.iter().find(|l| l.epoch == row.epoch && l.series == "class").unwrap();
        assert_eq!(Some(class.rate), row.class_noise_rate);
    }
}

#[test]
fn label_first_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("raw.data");
    let mut text = String::new();
    for i in 0..60 {
        let y = i % 3 + 1;
        text += &format!("{y},{},{},{}\n", y as f64 + 0.1 * (i % 5) as f64, (i % 7) as f64, -(y as f64));
    }
    std::fs::write(&path, text).unwrap();
    let out = dir.path().join("gen");
    ok(&["gen-data", "--dataset", s(&path), "--out", s(&out), "--q", "0.2", "--normalize"]);
    let m = json(out.join("manifest.json"));
    assert_eq!(m["num_classes"], 3);
    assert_eq!(m["num_instances"], 60);
}
