use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn phasewit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasewit")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn temp(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[test]
fn bell_witness_value() {
    let v = json(&phasewit(&["witness", "--state", "noon", "--N", "1", "--point", "0,0,0,0", "--sigma", "1"]));
    assert!((v["report"]["value"].as_f64().unwrap() + 0.25).abs() < 1e-12);
    assert_eq!(v["report"]["verdict"], "entangled");
    assert_eq!(v["provenance"]["config"]["seed"], 0);
    assert_eq!(v["provenance"]["config"]["cutoff"], "2,2");
}

#[test]
fn invalid_arguments_exit_2() {
    let out = phasewit(&["witness", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(phasewit(&["nonsense"]).status.code(), Some(2));
    assert_eq!(phasewit(&["witness", "--state", "noon"]).status.code(), Some(2));
    assert_eq!(phasewit(&["witness", "--state", "noon", "--N", "1", "--detect-tol", "0"]).status.code(), Some(2));
    assert_eq!(phasewit(&["witness", "--state", "noon", "--N", "3", "--cutoff", "2"]).status.code(), Some(2));
}

#[test]
fn guard_refusal_exits_3() {
    let out = phasewit(&["witness", "--state", "noon", "--N", "1", "--cutoff", "4", "--point", "2,0,2,0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn scan_writes_negative_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = temp(dir.path(), "plane.csv");
    let out = phasewit(&[
        "scan", "--state", "noon", "--N", "3", "--slice", "real", "--range", "-3:3:61", "--sigma", "1", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("re_alpha,im_alpha,re_beta,im_beta,sigma,value,verdict\n"));
    assert_eq!(text.lines().count(), 61 * 61 + 1);
    assert!(text.lines().any(|l| l.ends_with(",entangled")));
}

#[test]
fn output_is_byte_stable() {
    let args = ["scan", "--state", "cat", "--gamma", "1", "--slice", "diagonal", "--phase", "1.5707963267948966", "--range", "-2:2:41", "--threads"];
    let mut one: Vec<&str> = args.to_vec();
    one.push("1");
    let mut four: Vec<&str> = args.to_vec();
    four.push("4");
    let a = phasewit(&one);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, phasewit(&four).stdout);
    let sim = ["simulate", "--state", "noon", "--N", "1", "--shots", "5000", "--seed", "9"];
    assert_eq!(phasewit(&sim).stdout, phasewit(&sim).stdout);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = temp(dir.path(), "run.json");
    std::fs::write(&cfg, r#"{"state":"noon","N":2,"point":[0,0,0,0],"seed":5}"#).unwrap();
    let v = json(&phasewit(&["witness", "--config", cfg.to_str().unwrap(), "--N", "1"]));
    assert_eq!(v["provenance"]["config"]["N"], 1);
    assert_eq!(v["provenance"]["config"]["seed"], 5);
    assert!((v["report"]["value"].as_f64().unwrap() + 0.25).abs() < 1e-12);
    std::fs::write(&cfg, r#"{"colour":"blue"}"#).unwrap();
    assert_eq!(phasewit(&["witness", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn provenance_config_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let first = json(&phasewit(&["ppt", "--state", "cat", "--gamma", "1", "--p", "0.5"]));
    let cfg = temp(dir.path(), "again.json");
    std::fs::write(&cfg, first["provenance"]["config"].to_string()).unwrap();
    let second = json(&phasewit(&["ppt", "--config", cfg.to_str().unwrap()]));
    assert_eq!(first["ppt"], second["ppt"]);
    assert_eq!(first["husimi_minor"], second["husimi_minor"]);
}

#[test]
fn histograms_feed_the_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (k, (mix, phase)) in [("none", "0"), ("balanced", "0"), ("balanced", "1.5707963267948966"), ("transmit", "0"), ("reflect", "0")]
        .into_iter()
        .enumerate()
    {
        let path = temp(dir.path(), &format!("h{k}.json"));
        let seed = k.to_string();
        let out = phasewit(&[
            "simulate", "--state", "noon", "--N", "1", "--mix", mix, "--phase", phase, "--shots", "20000", "--seed", &seed,
            "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        files.push(path.to_str().unwrap().to_string());
    }
    let v = json(&phasewit(&["simulate", "--input", &files.join(",")]));
    let est = &v["estimate"];
    let (value, stderr) = (est["value"].as_f64().unwrap(), est["stderr"].as_f64().unwrap());
    assert!((value + 0.25).abs() < 5.0 * stderr, "{value} ± {stderr}");
    let missing = files[..4].join(",");
    assert_eq!(phasewit(&["simulate", "--input", &missing]).status.code(), Some(2));
}

#[test]
fn every_subcommand_runs() {
    let runs: [&[&str]; 6] = [
        &["sweep", "--state", "noon", "--N", "2", "--point", "-0.5,-0.5,-0.5,0.5"],
        &["rate", "--count", "20", "--d", "2"],
        &["hierarchy", "--state", "noon", "--N", "2", "--point", "-0.5,-0.5,-0.5,0.5"],
        &["validate", "--state", "noon", "--N", "2", "--point", "0.3,0,0.2,0.1"],
        &["ppt", "--state", "lossy-noon", "--N", "2", "--tau", "0.8", "--order", "2"],
        &["witness", "--state", "random", "--d", "3", "--index", "4", "--criterion", "mineig", "--order", "2", "--compare-ppt"],
    ];
    for args in runs {
        let out = phasewit(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
