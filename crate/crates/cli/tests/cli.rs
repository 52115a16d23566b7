use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

const SMOKE: &str = r#"
name = "smoke"
seeds = [7]

[problem]
kind = "quadratic"
dim = 2

[estimator]
kind = "gaussian"
variance = 0.1

[pool]
rule = "explicit"
delays = [1.0]

[[methods]]
method = "rennala"
gamma = 0.5
batch = 1

[stop]
max_steps = 10
"#;

fn timelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_timelab")).args(args).env_remove("TIMELAB_OUT").output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("smoke.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_twice_gives_identical_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMOKE);
    for out in ["a", "b"] {
        let o = timelab(&["run", "--config", &cfg, "--out", tmp.path().join(out).to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(tmp.path().join("a/rennala-n1-s7.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("b/rennala-n1-s7.csv")).unwrap();
    assert_eq!(a, b);
    // header plus the initial point and ten steps
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 12);
}

#[test]
fn smoke_run_is_fast() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMOKE);
    let start = Instant::now();
    let o = timelab(&["run", "--config", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert!(o.status.success());
    assert!(start.elapsed() < Duration::from_secs(1), "{:?}", start.elapsed());
}

#[test]
fn seed_flag_overrides_the_seed_list() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMOKE);
    let out = tmp.path().join("o");
    let o = timelab(&["run", "--config", &cfg, "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(out.join("rennala-n1-s3.csv").is_file());
    assert!(!out.join("rennala-n1-s7.csv").exists());
}

#[test]
fn errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMOKE);
    let missing = tmp.path().join("no/such/dir");
    let o = timelab(&["run", "--config", &cfg, "--out", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not exist"));

    let bad = write_config(tmp.path(), &SMOKE.replace("batch = 1", "batch = 0"));
    let o = timelab(&["run", "--config", &bad, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("methods[0].batch"));

    let o = timelab(&["sweep", "--config", &cfg, "--out", tmp.path().join("y").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_only_prints_a_pass_line() {
    let o = timelab(&["verify", "--only", "lemma_tau"]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("[PASS] criterion 5 lemma_tau"), "{stdout}");
    assert_eq!(timelab(&["verify", "--only", "nothing_matches"]).status.code(), Some(2));
}

#[test]
fn collect_time_worked_example() {
    let o = timelab(&["collect-time", "--taus", "1,4", "--s", "2"]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("min_j t'(j) 3 at j = 1"), "{stdout}");
}
