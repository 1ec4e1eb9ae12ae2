mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::write_synthetic_dataset;

fn texting(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_texting"))
        .args(args)
        .env("TEXTING_THREADS", "1")
        .output()
        .unwrap()
}

fn common_args<'a>(data: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "--dataset",
        "toy",
        "--data-dir",
        data,
        "--out-dir",
        out,
        "--embedding-dim",
        "8",
        "--hidden",
        "8",
        "--max-epochs",
        "5",
        "--batch-size",
        "8",
    ]
}

fn read(dir: &Path, file: &str) -> Vec<u8> {
    std::fs::read(dir.join(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

#[test]
fn train_outputs_are_byte_identical() {
    let data = tempfile::tempdir().unwrap();
    write_synthetic_dataset(data.path(), "toy", 20, 8, 1);
    let outs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for out in &outs {
        let mut args = vec!["train", "--seeds", "1,2", "--channel", "multi"];
        args.extend(common_args(
            data.path().to_str().unwrap(),
            out.path().to_str().unwrap(),
        ));
        let o = texting(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let line: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(line["mean"].as_f64().unwrap() >= 0.0);
    }
    for file in [
        "full.json",
        "full.csv",
        "config.json",
        "metrics_seed1_local.csv",
        "metrics_seed2_global.csv",
        "checkpoint_seed1_local/params.bin",
        "checkpoint_seed1_local/manifest.json",
    ] {
        assert_eq!(
            read(outs[0].path(), file),
            read(outs[1].path(), file),
            "{file}"
        );
    }

    // the saved checkpoint scores the test split
    let ckpt = outs[0].path().join("checkpoint_seed1_local");
    let mut args = vec!["eval", "--checkpoint", ckpt.to_str().unwrap()];
    args.extend(common_args(
        data.path().to_str().unwrap(),
        outs[0].path().to_str().unwrap(),
    ));
    let o = texting(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(line["test_docs"], 16);
}

#[test]
fn sweep_inductive_and_attention() {
    let data = tempfile::tempdir().unwrap();
    write_synthetic_dataset(data.path(), "toy", 20, 6, 2);
    let d = data.path().to_str().unwrap();
    let out = tempfile::tempdir().unwrap();
    let o_path = out.path().to_str().unwrap();

    let mut args = vec![
        "sweep", "--param", "window", "--values", "2,3,5", "--seeds", "0,1",
    ];
    args.extend(common_args(d, o_path));
    let o = texting(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(read(out.path(), "sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
    let summary: serde_json::Value =
        serde_json::from_slice(&read(out.path(), "sweep.json")).unwrap();
    let dens: Vec<f64> = summary["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["density"].as_f64().unwrap())
        .collect();
    assert!(dens.windows(2).all(|w| w[0] <= w[1]));

    let mut args = vec!["inductive", "--docs-per-class", "5"];
    args.extend(common_args(d, o_path));
    let o = texting(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["runs"][0]["train_docs"], 10);

    let mut args = vec!["inductive", "--fractions", "0.5,1.0", "--seeds", "3"];
    args.extend(common_args(d, o_path));
    assert!(texting(&args).status.success());
    let curve = String::from_utf8(read(out.path(), "inductive_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 3);

    let mut args = vec!["attention", "--docs", "3", "--max-over-dims"];
    args.extend(common_args(d, o_path));
    let o = texting(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let html = String::from_utf8(read(out.path(), "attention.html")).unwrap();
    assert_eq!(html.matches("class=\"doc\"").count(), 3);
}

#[test]
fn failures_print_error_line_and_exit_nonzero() {
    let data = tempfile::tempdir().unwrap();
    write_synthetic_dataset(data.path(), "toy", 4, 2, 0);
    let out = tempfile::tempdir().unwrap();
    let d = data.path().to_str().unwrap();
    let o_path = out.path().to_str().unwrap();

    let o = texting(&[
        "stats",
        "--dataset",
        "toy",
        "--data-dir",
        d,
        "--out-dir",
        o_path,
        "--verify",
    ]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "no_reference_stats");

    let o = texting(&[
        "stats",
        "--dataset",
        "toy",
        "--data-dir",
        d,
        "--out-dir",
        o_path,
    ]);
    assert!(o.status.success());
    let stats: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stats["docs"], 12);

    let o = texting(&[
        "train",
        "--dataset",
        "absent",
        "--data-dir",
        d,
        "--out-dir",
        o_path,
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "missing_file");

    let mut args = vec!["sweep", "--param", "steps", "--values", "3,2"];
    args.extend(common_args(d, o_path));
    let err: serde_json::Value = serde_json::from_slice(&texting(&args).stderr).unwrap();
    assert_eq!(err["error"], "config");
}
