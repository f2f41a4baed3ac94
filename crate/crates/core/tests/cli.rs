use std::path::Path;
use std::process::{Command, Output};

fn calib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_calib"))
        .args(args)
        .env("CALIB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&calib(&["--help"])), 0);
    assert_eq!(code(&calib(&["run", "--help"])), 0);
    assert_eq!(code(&calib(&["run", "--synthetic", "--bogus"])), 1);
    // A data source is required.
    assert_eq!(code(&calib(&["run"])), 1);
    assert_eq!(code(&calib(&["run", "--synthetic", "--scenarios", "nope"])), 1);
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = calib(&["run", "--data", "/no/such/file.csv", "--out", p(&out)]);
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/no/such/file.csv"));

    let oob_nb = calib(&["run", "--synthetic", "20", "--classifier", "nb", "--scenarios", "raw,oob"]);
    assert_eq!(code(&oob_nb), 1);
    assert!(!out.exists());

    let bad_threads = Command::new(env!("CARGO_BIN_EXE_calib"))
        .args(["synth", "--out", p(&dir.path().join("x.csv"))])
        .env("CALIB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&bad_threads), 1);
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "a,b,label\n1,2,1\n3,oops,0\n4,5,1\n6,7,0\n").unwrap();
    let out = calib(&["run", "--data", p(&data), "--classifier", "nb", "--out", p(&dir.path().join("o"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("oops"));
}

#[test]
fn run_writes_all_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let status = calib(&[
        "run",
        "--synthetic",
        "30",
        "--classifier",
        "rf",
        "--rf-ntree",
        "20",
        "--scenarios",
        "raw,dgg,oob",
        "--folds",
        "3",
        "--dg-points",
        "100",
        "--dgg-group",
        "10",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&status), 0, "{}", String::from_utf8_lossy(&status.stderr));
    for f in ["results.json", "summary.csv", "summary.md", "timings.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let records = calib::harness::read_results(&out).unwrap();
    assert_eq!(records.len(), 9);
    let md = std::fs::read_to_string(out.join("summary.md")).unwrap();
    assert!(md.contains("| DGG + ENIR |"));
    assert!(md.contains("MSE (truth)"));
}

#[test]
fn imbalance_run_lists_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synth.csv");
    assert_eq!(code(&calib(&["synth", "--n-per-class", "40", "--out", p(&data)])), 0);
    let out = dir.path().join("imb");
    let status = calib(&[
        "run",
        "--imbalance",
        p(&data),
        "--levels",
        "20,10",
        "--classifier",
        "nb",
        "--scenarios",
        "raw,enir",
        "--folds",
        "3",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&status), 0, "{}", String::from_utf8_lossy(&status.stderr));
    let listing = std::fs::read_to_string(out.join("datasets.csv")).unwrap();
    assert_eq!(listing.lines().count(), 5);
    assert_eq!(calib::harness::read_results(&out).unwrap().len(), 4 * 2 * 3);
}

#[test]
fn calibrator_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synth.csv");
    let truth = dir.path().join("truth.csv");
    let synth = calib(&["synth", "--n-per-class", "50", "--seed", "3", "--out", p(&data), "--truth", p(&truth)]);
    assert_eq!(code(&synth), 0);
    assert!(truth.is_file());

    let points = dir.path().join("points.csv");
    let dg = calib(&[
        "datagen", "--data", p(&data), "--classifier", "nb", "--points", "200", "--group", "10", "--out", p(&points),
    ]);
    assert_eq!(code(&dg), 0, "{}", String::from_utf8_lossy(&dg.stderr));
    assert_eq!(std::fs::read_to_string(&points).unwrap().lines().count(), 21);

    let scores = dir.path().join("scores.csv");
    std::fs::write(&scores, "score\n0.0\n0.25\n0.5\n0.75\n1.0\n").unwrap();
    for method in ["enir", "isotonic", "platt", "binning"] {
        let model = dir.path().join(format!("{method}.json"));
        let fit = calib(&["fit-calibrator", "--points", p(&points), "--method", method, "--bins", "4", "--out", p(&model)]);
        assert_eq!(code(&fit), 0, "{method}: {}", String::from_utf8_lossy(&fit.stderr));
        let applied = dir.path().join(format!("{method}.csv"));
        let apply = calib(&["apply-calibrator", "--model", p(&model), "--scores", p(&scores), "--out", p(&applied)]);
        assert_eq!(code(&apply), 0);
        let mut reader = csv::Reader::from_path(&applied).unwrap();
        let probs: Vec<f64> = reader.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
        assert_eq!(probs.len(), 5);
        assert!(probs.iter().all(|q| (0.0..=1.0).contains(q)));
        if method != "enir" {
            assert!(probs.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{method}: {probs:?}");
        }
    }
}
