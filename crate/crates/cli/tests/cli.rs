use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn greenroute(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_greenroute"))
        .args(args)
        .current_dir(dir)
        .env_remove("GREENROUTE_SEED")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_one_with_usage_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&[][..], &["frobnicate"][..], &["generate", "--out", "x.csv", "--bogus"][..], &["train"][..]] {
        let out = greenroute(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"), "{args:?}");
    }
    let help = greenroute(&["--help"], dir.path());
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("repro"));
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["generate", "--n", "0", "--out", "c.csv"],
        &["evaluate", "--bundle", "missing.bundle.json", "--data", "c.csv"],
        &["train", "--task", "emissions", "--family", "xgboost"],
        &["generate", "--out", "c.csv", "--regime-mix", "0.5,0.5,0.5"],
    ];
    for args in cases {
        let out = greenroute(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    }
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ok(&greenroute(&["generate", "--n", "1000", "--seed", "7", "--out", "a.csv"], dir.path()));
    ok(&greenroute(&["generate", "--n", "1000", "--seed", "7", "--out", "b.csv"], dir.path()));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(a.iter().filter(|&&b| b == b'\n').count(), 1001);
    let manifest = json(&dir.path().join("a.manifest.json"));
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["ground_truth"]["regimes"].as_array().unwrap().len(), 1000);
}

#[test]
fn seed_comes_from_the_environment_when_not_given() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_greenroute"));
        c.args(args).current_dir(dir.path()).env_remove("GREENROUTE_SEED");
        if let Some(s) = env {
            c.env("GREENROUTE_SEED", s);
        }
        ok(&c.output().unwrap());
    };
    run(&["generate", "--n", "50", "--out", "env.csv"], Some("11"));
    run(&["generate", "--n", "50", "--seed", "11", "--out", "flag.csv"], None);
    run(&["generate", "--n", "50", "--out", "default.csv"], None);
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("env.csv"), read("flag.csv"));
    assert_ne!(read("env.csv"), read("default.csv"));
}

#[test]
fn evaluate_reproduces_the_training_r2_exactly() {
    let dir = tempfile::tempdir().unwrap();
    ok(&greenroute(&["generate", "--n", "1500", "--seed", "7", "--out", "corpus.csv"], dir.path()));
    ok(&greenroute(
        &["train", "--task", "emissions", "--family", "gbt", "--seed", "7", "--data", "corpus.csv", "--out-dir", "models"],
        dir.path(),
    ));
    let bundle = dir.path().join("models/emissions.bundle.json");
    assert!(bundle.exists());
    ok(&greenroute(
        &["evaluate", "--bundle", "models/emissions.bundle.json", "--data", "corpus.csv", "--out", "eval.json"],
        dir.path(),
    ));
    let trained = json(&dir.path().join("models/emissions.report.json"));
    let evaluated = json(&dir.path().join("eval.json"));
    let r2 = |v: &Value| v["rows"][0]["r2"].as_f64().unwrap().to_bits();
    assert_eq!(trained["rows"][0]["model"], "gbt");
    assert_eq!(r2(&trained), r2(&evaluated));
    assert_eq!(trained["corpus_hash"], evaluated["corpus_hash"]);

    // a different table cannot be matched to the stored split
    ok(&greenroute(&["generate", "--n", "200", "--seed", "8", "--out", "other.csv"], dir.path()));
    let out = greenroute(&["evaluate", "--bundle", "models/emissions.bundle.json", "--data", "other.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    ok(&greenroute(
        &["evaluate", "--bundle", "models/emissions.bundle.json", "--data", "other.csv", "--all-rows"],
        dir.path(),
    ));
}

#[test]
fn generated_and_csv_training_agree() {
    let dir = tempfile::tempdir().unwrap();
    ok(&greenroute(&["generate", "--demand", "--seed", "3", "--out", "demand.csv"], dir.path()));
    ok(&greenroute(&["train", "--task", "demand", "--family", "ols", "--seed", "3", "--out-dir", "gen"], dir.path()));
    ok(&greenroute(
        &["train", "--task", "demand", "--family", "ols", "--seed", "3", "--data", "demand.csv", "--out-dir", "csv"],
        dir.path(),
    ));
    assert_eq!(json(&dir.path().join("gen/demand.report.json")), json(&dir.path().join("csv/demand.report.json")));
}

#[test]
fn cluster_methods_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    ok(&greenroute(&["generate", "--n", "600", "--seed", "5", "--out", "c.csv"], dir.path()));
    let cases: [(&str, &[&str]); 4] = [
        ("elbow", &["inertia.csv"]),
        ("kmeans", &["labels.csv", "pca.csv"]),
        ("dbscan", &["labels.csv", "k_distance.csv", "pca.csv"]),
        ("pca", &["pca_scores.csv"]),
    ];
    for (method, files) in cases {
        let out_dir = format!("out-{method}");
        ok(&greenroute(&["cluster", "--method", method, "--data", "c.csv", "--out-dir", &out_dir], dir.path()));
        for f in files {
            let text = std::fs::read_to_string(dir.path().join(&out_dir).join(f)).unwrap();
            assert!(text.lines().count() > 1, "{method}/{f}");
        }
    }
    let scatter = std::fs::read_to_string(dir.path().join("out-dbscan/pca.csv")).unwrap();
    assert!(scatter.starts_with("pc1,pc2,cluster_label,is_outlier\n"));
}

#[test]
fn outliers_prints_flagged_indices() {
    let dir = tempfile::tempdir().unwrap();
    ok(&greenroute(
        &["generate", "--n", "1000", "--seed", "7", "--outlier-fraction", "0.048", "--out", "c.csv"],
        dir.path(),
    ));
    let out = greenroute(&["outliers", "--data", "c.csv", "--out", "report.json"], dir.path());
    ok(&out);
    let printed: Vec<usize> = String::from_utf8(out.stdout).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    let truth: Vec<usize> = json(&dir.path().join("c.manifest.json"))["ground_truth"]["outlier_indices"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap() as usize)
        .collect();
    assert_eq!(truth.len(), 48);
    let hits = truth.iter().filter(|i| printed.contains(i)).count();
    assert!(hits >= 46, "{hits} of 48 found");
    assert_eq!(json(&dir.path().join("report.json"))["outlier_indices"].as_array().unwrap().len(), printed.len());

    let iqr = greenroute(&["outliers", "--data", "c.csv", "--filter", "iqr", "--column", "distance_km"], dir.path());
    ok(&iqr);
    assert!(!iqr.stdout.is_empty());
}

#[test]
fn preprocess_fit_then_replay_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    ok(&greenroute(&["generate", "--n", "300", "--seed", "2", "--out", "c.csv"], dir.path()));
    ok(&greenroute(
        &["preprocess", "--input", "c.csv", "--task", "transit", "--out", "fit.csv", "--fitted-out", "recipe.json"],
        dir.path(),
    ));
    ok(&greenroute(&["preprocess", "--input", "c.csv", "--replay", "recipe.json", "--out", "replay.csv"], dir.path()));
    let fit = std::fs::read(dir.path().join("fit.csv")).unwrap();
    assert_eq!(fit, std::fs::read(dir.path().join("replay.csv")).unwrap());
    let header = String::from_utf8_lossy(&fit).lines().next().unwrap().to_string();
    assert!(header.contains("vehicle_type=DieselTruck") && header.contains("fuel_efficiency"), "{header}");

    let recipe = r#"{"scaling": {"distance_km": "min_max"}}"#;
    std::fs::write(dir.path().join("mine.json"), recipe).unwrap();
    let out = greenroute(&["preprocess", "--input", "c.csv", "--recipe", "mine.json", "--out", "mine.csv"], dir.path());
    ok(&out);
}

#[test]
fn cluster_bundle_is_trained_by_the_elbow() {
    let dir = tempfile::tempdir().unwrap();
    ok(&greenroute(&["generate", "--n", "1200", "--seed", "7", "--out", "c.csv"], dir.path()));
    let out = greenroute(&["train", "--task", "cluster", "--data", "c.csv", "--out-dir", "m"], dir.path());
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("k 3 "));
    assert!(dir.path().join("m/cluster.bundle.json").exists());
    assert!(dir.path().join("m/inertia.csv").exists());
}

#[test]
fn repro_prints_one_verdict_per_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = greenroute(&["repro", "--seed", "7", "--out-dir", "run"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    let verdicts: Vec<&str> = text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert_eq!(verdicts.len(), 9, "{text}");
    for (i, line) in verdicts.iter().enumerate() {
        assert!(line.contains(&format!("[{}]", i + 1)), "{line}");
    }
    let all_pass = verdicts.iter().all(|l| l.starts_with("PASS"));
    assert_eq!(out.status.code(), Some(if all_pass { 0 } else { 1 }));
    for f in ["SHA256SUMS", "corpus.csv", "emissions.bundle.json", "transit.report.json", "cluster.bundle.json"] {
        assert!(dir.path().join("run").join(f).exists(), "{f}");
    }
}
