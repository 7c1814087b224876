use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn recap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recap"))
        .args(args)
        .env("RECAP_THREADS", "2")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = recap(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn train(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let images = data("mnist_train_2k-images-idx3-ubyte.gz");
    let labels = data("mnist_train_2k-labels-idx1-ubyte.gz");
    let mut args = vec![
        "train",
        "--train-images",
        p(&images),
        "--train-labels",
        p(&labels),
        "--n-units",
        "32",
        "--subset",
        "10",
        "--out",
        p(&out),
    ];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

#[test]
fn train_eval_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let a = train(dir.path(), "a.rcap", &["--keep-states"]);
    let b = train(dir.path(), "b.rcap", &["--keep-states"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let images = data("mnist_test_1k-images-idx3-ubyte.gz");
    let labels = data("mnist_test_1k-labels-idx1-ubyte.gz");
    let json = dir.path().join("eval.json");
    let text = ok(&["eval", "--model", p(&a), "--images", p(&images), "--labels", p(&labels), "--json", p(&json)]);
    assert!(text.contains("samples 1000"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["samples"], 1000);

    let text = ok(&["inspect", "--model", p(&a)]);
    assert!(text.contains("kind       recap"));
    assert!(text.contains("levels     8"));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "model = \"ridge\"\nn_units = 32\nsubset = 10\ntrain_images = {:?}\ntrain_labels = {:?}\n",
            data("mnist_train_2k-images-idx3-ubyte.gz"),
            data("mnist_train_2k-labels-idx1-ubyte.gz")
        ),
    )
    .unwrap();
    let out = dir.path().join("r.rcap");
    let report = dir.path().join("train.json");
    let images = data("mnist_test_1k-images-idx3-ubyte.gz");
    let labels = data("mnist_test_1k-labels-idx1-ubyte.gz");
    let text = ok(&[
        "train",
        "--config",
        p(&cfg),
        "--seed",
        "4",
        "--out",
        p(&out),
        "--report",
        p(&report),
        "--test-images",
        p(&images),
        "--test-labels",
        p(&labels),
    ]);
    assert!(text.contains("samples 1000"));
    assert!(report.exists());
    let text = ok(&["inspect", "--model", p(&out)]);
    assert!(text.contains("kind       ridge"));
    assert!(text.contains("seed=4"));

    fs::write(&cfg, "n_unitz = 3\n").unwrap();
    assert_eq!(recap(&["train", "--config", p(&cfg), "--out", p(&out)]).status.code(), Some(2));
}

#[test]
fn corrupt_and_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let model = train(dir.path(), "m.rcap", &[]);
    let clean = dir.path().join("clean.npy");
    let images = data("mnist_test_1k-images-idx3-ubyte.gz");
    let labels = data("mnist_test_1k-labels-idx1-ubyte.gz");
    // An NPY copy of the test set stands in for the clean input.
    ok(&["corrupt", "--in", p(&images), "--labels", p(&labels), "--kind", "brightness", "--severity", "1", "--out", p(&clean)]);
    let one = dir.path().join("one.npy");
    ok(&["corrupt", "--in", p(&clean), "--kind", "shot_noise", "--severity", "2", "--seed", "3", "--out", p(&one)]);
    let again = dir.path().join("again.npy");
    ok(&["corrupt", "--in", p(&clean), "--kind", "shot_noise", "--severity", "2", "--seed", "3", "--out", p(&again)]);
    assert_eq!(fs::read(&one).unwrap(), fs::read(&again).unwrap());

    let ext = dir.path().join("ext");
    ok(&["corrupt", "--in", p(&clean), "--kind", "motion_blur", "--out", p(&ext)]);
    for s in 1..=5 {
        assert!(ext.join(format!("motion_blur_{s}.npy")).exists());
        assert!(ext.join(format!("motion_blur_{s}_labels.npy")).exists());
    }

    let reference = dir.path().join("ref.csv");
    let mut table = String::from("clean,,0.1\n");
    for s in 1..=5 {
        table.push_str(&format!("motion_blur,{s},0.{}\n", s + 1));
    }
    fs::write(&reference, table).unwrap();
    let csv = dir.path().join("out.csv");
    let json = dir.path().join("out.json");
    let text = ok(&[
        "benchmark",
        "--model",
        p(&model),
        "--clean",
        p(&clean),
        "--corruptions",
        p(&ext),
        "--reference",
        p(&reference),
        "--csv",
        p(&csv),
        "--json",
        p(&json),
    ]);
    assert!(text.contains("motion_blur"));
    assert!(text.contains("relative mCE"));
    assert!(text.contains("partial"));
    let csv_text = fs::read_to_string(&csv).unwrap();
    assert_eq!(csv_text.lines().filter(|l| l.starts_with("motion_blur,")).count(), 5);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["missing"].as_array().unwrap().len(), 70);
    assert_eq!(v["severity_table"], "recap-severity/v1");
    // The CSV output is itself a valid reference table.
    let self_ref = ok(&["benchmark", "--model", p(&model), "--clean", p(&clean), "--corruptions", p(&ext), "--reference", p(&csv)]);
    assert!(self_ref.contains("relative mCE 100.0"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let images = data("mnist_test_1k-images-idx3-ubyte.gz");
    let labels = data("mnist_test_1k-labels-idx1-ubyte.gz");
    let out = dir.path().join("x.npy");
    let code = |args: &[&str]| recap(args).status.code();
    assert_eq!(code(&["corrupt", "--in", p(&images), "--labels", p(&labels), "--kind", "fog", "--out", p(&out)]), Some(2));
    assert_eq!(
        code(&["corrupt", "--in", p(&images), "--labels", p(&labels), "--kind", "gaussian_noise", "--severity", "6", "--out", p(&out)]),
        Some(2)
    );
    assert_eq!(code(&["eval", "--model", p(&dir.path().join("missing.rcap")), "--images", p(&images), "--labels", p(&labels)]), Some(3));
    let junk = dir.path().join("junk.rcap");
    fs::write(&junk, b"RCAP not really a model").unwrap();
    assert_eq!(code(&["eval", "--model", p(&junk), "--images", p(&images), "--labels", p(&labels)]), Some(3));
    assert_eq!(code(&["train", "--out", p(&junk), "--leak-rate", "1.5"]), Some(2));
    assert_eq!(code(&["frobnicate"]), Some(2));
}
