use std::path::Path;
use std::process::{Command, Output};

fn websample(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_websample"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

const SMALL: &str = "seed = 1\n[graph]\nn = 300\n[walk]\nwalkers = 2\nstep_budget = 400\n[sample]\ntarget_size = 20\nrepetitions = 2\n";

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ok.toml"), SMALL).unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[walk]\nwalkers = 0\n").unwrap();
    std::fs::write(dir.path().join("typo.toml"), "[walk]\nwalker = 3\n").unwrap();

    assert_eq!(websample(dir.path(), &["--config", "bad.toml", "all"]).status.code(), Some(2));
    assert_eq!(websample(dir.path(), &["--config", "typo.toml", "all"]).status.code(), Some(2));
    assert_eq!(websample(dir.path(), &["--config", "missing.toml", "all"]).status.code(), Some(2));
    assert_eq!(websample(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(websample(dir.path(), &["--help"]).status.code(), Some(0));

    // a stage whose inputs are missing fails as a stage
    let out = websample(dir.path(), &["--config", "ok.toml", "--out", "empty", "sample"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sample"));
    assert!(dir.path().join("empty/.partial").exists());

    assert_eq!(websample(dir.path(), &["--config", "ok.toml", "--out", "run", "all"]).status.code(), Some(0));
    assert!(dir.path().join("run/manifest.json").exists());
    assert!(!dir.path().join("run/.partial").exists());
}

#[test]
fn staged_run_equals_all() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    let base = ["--config", "c.toml", "--verify-mode", "--seed", "9"];
    let run = |out: &str, cmd: &str| {
        let mut args = base.to_vec();
        args.extend(["--out", out, cmd]);
        assert_eq!(websample(dir.path(), &args).status.code(), Some(0), "{cmd}");
    };
    run("one", "all");
    for stage in ["generate", "walk", "sample", "analyze", "compare"] {
        run("staged", stage);
    }
    for file in ["manifest.json", "comparison.csv", "walk/C.trace", "samples/C_PR/rep1.txt", "reports/summary.json"] {
        let a = std::fs::read(dir.path().join("one").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("staged").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
    let manifest = std::fs::read_to_string(dir.path().join("one/manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 9"));
}

#[test]
fn compare_refuses_foreign_graph() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL).unwrap();
    for (out, seed) in [("a", "1"), ("b", "2")] {
        let args = ["--config", "c.toml", "--seed", seed, "--out", out, "all"];
        assert_eq!(websample(dir.path(), &args).status.code(), Some(0));
    }
    let out = websample(dir.path(), &["--config", "c.toml", "--out", "a", "compare", "b/manifest.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("refused"));
}
