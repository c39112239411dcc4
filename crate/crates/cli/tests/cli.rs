//! End-to-end runs of the `geomae` binary.

use std::path::Path;
use std::process::{Command, Output};

fn geomae(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geomae"))
        .args(args)
        .current_dir(dir)
        .env("GEOMAE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = geomae(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn gen(dir: &Path) {
    ok(
        dir,
        &[
            "gen-data",
            "--kind",
            "hemisphere",
            "--n",
            "300",
            "--seed",
            "1",
            "--out",
            "d.csv",
        ],
    );
}

#[test]
fn zero_alpha_geometric_equals_vanilla() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    gen(d);
    let common = ["--data", "d.csv", "--epochs", "2", "--hidden", "8,8", "--seed", "4"];
    let mut geo = vec![
        "train",
        "--model",
        "geometric",
        "--alpha",
        "0",
        "--out",
        "g.gae",
        "--log",
        "g.csv",
    ];
    geo.extend(common);
    let mut van = vec!["train", "--model", "vanilla", "--out", "v.gae", "--log", "v.csv"];
    van.extend(common);
    ok(d, &geo);
    ok(d, &van);
    assert_eq!(
        std::fs::read(d.join("g.gae")).unwrap(),
        std::fs::read(d.join("v.gae")).unwrap()
    );
    assert_eq!(read(d, "g.csv"), read(d, "v.csv"));
}

#[test]
fn identical_embedding_scores_ideal() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    gen(d);
    ok(
        d,
        &[
            "evaluate",
            "--data",
            "d.csv",
            "--embedding",
            "d.csv",
            "--k-step",
            "5",
            "--k-max",
            "10",
            "--standardize",
            "false",
            "--out",
            "e.csv",
        ],
    );
    let csv = read(d, "e.csv");
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let get = |name: &str| -> f64 { row[header.iter().position(|h| *h == name).unwrap()].parse().unwrap() };
    assert_eq!(get("kNN"), 1.0);
    assert_eq!(get("Trust"), 1.0);
    assert_eq!(get("Stress"), 0.0);
    assert!((get("Spear") - 1.0).abs() < 1e-12);
    assert_eq!(get("KL0.1"), 0.0);
}

#[test]
fn flags_override_config_file() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    std::fs::write(d.join("c.txt"), "# toy data\nkind = swiss_roll\nn = 50\nseed = 3\n").unwrap();
    ok(d, &["--config", "c.txt", "gen-data", "--n", "20", "--out", "a.csv"]);
    assert_eq!(read(d, "a.csv").lines().count(), 21);
    let manifest = read(d, "a.csv.manifest.txt");
    assert!(manifest.contains("kind=swiss_roll"), "{manifest}");
    assert!(manifest.contains("n=20"), "{manifest}");
    assert!(manifest.lines().any(|l| l == "seed 3"), "{manifest}");
}

#[test]
fn config_rejects_unknown_keys() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    std::fs::write(d.join("c.txt"), "colour = red\n").unwrap();
    let out = geomae(d, &["--config", "c.txt", "gen-data", "--out", "a.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: kind="));
}

#[test]
fn errors_are_single_lines() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let out = geomae(d, &["train", "--data", "missing.csv", "--out", "m.gae"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: kind=io msg=\""), "{err}");

    let out = geomae(d, &["train", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: kind=usage"), "{err}");
}

#[test]
fn diagnose_writes_all_artifacts() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    gen(d);
    ok(d, &["train", "--data", "d.csv", "--model", "pca", "--out", "p.gae"]);
    for what in ["indicatrices", "determinant", "condition"] {
        ok(
            d,
            &[
                "diagnose", "--model", "p.gae", "--data", "d.csv", "--what", what, "--steps", "10", "--out", what,
            ],
        );
        assert!(d.join(what).join("manifest.txt").exists());
    }
    for f in [
        "indicatrices/indicatrices.svg",
        "determinant/determinant.csv",
        "condition/condition.csv",
    ] {
        assert!(d.join(f).exists(), "{f}");
    }
    // PCA decoders are isometric
    let cond = read(d, "condition/condition.csv");
    for line in cond.lines().skip(1) {
        let c: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((c - 1.0).abs() < 1e-9, "{line}");
    }
}
