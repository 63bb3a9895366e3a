use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_markov-adam"));
    cmd.env_remove("MARKOV_ADAM_OUT");
    cmd
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn text(out: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
}

fn csv_rows(path: &Path) -> Vec<String> {
    let body = fs::read_to_string(path).unwrap();
    let mut lines = body.lines().map(str::to_string);
    assert_eq!(lines.next().as_deref(), Some("t,mean_error,se,seed_count"));
    lines.collect()
}

#[test]
fn run_td_minimal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "td.toml", "fixture = \"builtin:td_ten_state\"\nhorizon = 10\nseeds = 1\n");
    let out = bin().arg("run-td").arg("--config").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert!(out.status.success(), "{}", text(&out));
    let rows = csv_rows(&dir.path().join("o/td.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.ends_with(",1")));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/td.json")).unwrap()).unwrap();
    assert_eq!(summary["invariant_violations"], 0);
    assert!(dir.path().join("o/td.timing.json").exists());
}

#[test]
fn run_pg_amsgrad_and_sgd() {
    let dir = tempfile::tempdir().unwrap();
    for algo in ["amsgrad", "sgd"] {
        let body = format!("fixture = \"builtin:pg_four_state\"\nalgorithm = \"{algo}\"\nhorizon = 10\n");
        let cfg = write_config(dir.path(), &format!("{algo}.toml"), &body);
        let out_dir = dir.path().join(algo);
        let out = bin().arg("run-pg").arg("--config").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
        assert!(out.status.success(), "{}", text(&out));
        assert!(!csv_rows(&out_dir.join("pg.csv")).is_empty());
    }
}

#[test]
fn fixture_paths_resolve_against_the_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("mdp.toml"),
        markov_adam::fixture::BUILTIN.iter().find(|b| b.0 == "three_state").unwrap().1,
    )
    .unwrap();
    let cfg = write_config(dir.path(), "pg.toml", "fixture = \"mdp.toml\"\nhorizon = 20\nout_dir = \"res\"\n");
    let out = bin().arg("run-pg").arg("--config").arg(&cfg).current_dir("/").output().unwrap();
    assert!(out.status.success(), "{}", text(&out));
    assert!(dir.path().join("res/pg.csv").exists());
}

#[test]
fn invalid_configs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "fixture = \"builtin:td_ten_state\"\nlambda = 1.5\n");
    let out = bin().arg("run-td").arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(text(&out).contains("lambda"));

    let cfg = write_config(dir.path(), "missing.toml", "fixture = \"gone.toml\"\n");
    let out = bin().arg("run-td").arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(text(&out).contains("fixture file not found"));

    let cfg = write_config(dir.path(), "algo.toml", "fixture = \"builtin:pg_four_state\"\nalgorithm = \"rmsprop\"\n");
    let out = bin().arg("run-pg").arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(text(&out).contains("algorithm"));
}

#[test]
fn repeat_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "td.toml",
        "fixture = \"builtin:td_ten_state\"\nhorizon = 2000\nseeds = 4\nseed = 11\n",
    );
    for sub in ["a", "b"] {
        let out =
            bin().arg("run-td").arg("--config").arg(&cfg).arg("--out").arg(dir.path().join(sub)).output().unwrap();
        assert!(out.status.success(), "{}", text(&out));
    }
    for file in ["td.csv", "td.json"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
}

#[test]
fn environment_sets_out_dir_below_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "pg.toml", "fixture = \"builtin:pg_four_state\"\nhorizon = 10\n");
    let env_dir = dir.path().join("env");
    let out = bin().arg("run-pg").arg("--config").arg(&cfg).env("MARKOV_ADAM_OUT", &env_dir).output().unwrap();
    assert!(out.status.success(), "{}", text(&out));
    assert!(env_dir.join("pg.csv").exists());
    let flag_dir = dir.path().join("flag");
    let out = bin()
        .arg("run-pg")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&flag_dir)
        .env("MARKOV_ADAM_OUT", &env_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(flag_dir.join("pg.csv").exists());
}

#[test]
fn diagnose_two_state() {
    let out = bin().args(["diagnose-mdp", "builtin:two_state"]).output().unwrap();
    assert!(out.status.success(), "{}", text(&out));
    let s = String::from_utf8_lossy(&out.stdout);
    let rho: f64 = s
        .lines()
        .find_map(|l| l.split_once("rho = "))
        .and_then(|(_, rest)| rest.split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| panic!("no rho line in\n{s}"));
    assert!((rho - 0.7).abs() <= 0.07, "{rho}");
}

#[test]
fn diagnose_reducible_fails() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/reducible.toml");
    let out = bin().arg("diagnose-mdp").arg(&path).output().unwrap();
    assert!(!out.status.success());
    assert!(text(&out).contains("not ergodic"), "{}", text(&out));
}

#[test]
fn diagnose_missing_file_fails() {
    let out = bin().args(["diagnose-mdp", "/no/such/fixture.toml"]).output().unwrap();
    assert!(!out.status.success());
    assert!(text(&out).contains("not found"));
}
