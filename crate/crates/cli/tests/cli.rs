use std::path::Path;
use std::process::{Command, Output};

fn srl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srl"))
        .current_dir(dir)
        .args(args)
        .env_remove("SRL_SEED")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn values(csv: &str) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

const SMALL: &str = "episodes = 4\nsteps = 100\nhorizon = 5\n";

#[test]
fn missing_config_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = srl(dir.path(), &["train", "--config", "nowhere.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere.txt"));
}

#[test]
fn bad_config_and_suite_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "sigma = -1\n").unwrap();
    assert_eq!(srl(dir.path(), &["validate", "--config", "bad.txt"]).status.code(), Some(2));
    assert_eq!(srl(dir.path(), &["validate", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(srl(dir.path(), &["oracle", "--what", "nope"]).status.code(), Some(2));
    assert_eq!(srl(dir.path(), &["oracle", "--what", "phi", "--x", "a..b"]).status.code(), Some(2));
}

#[test]
fn validate_closed_form_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = srl(dir.path(), &["validate", "--suite", "closedform"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().any(|l| l.starts_with("PASS closedform/")));
}

#[test]
fn oracle_boundary_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = srl(dir.path(), &["oracle", "--what", "boundary"]);
    assert!(o.status.success());
    let get = |key: &str| -> f64 {
        stdout(&o)
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(|v| v.parse().unwrap()))
            .unwrap()
    };
    assert!((get("x_hat") - 1.2325582737).abs() < 1e-9);
    assert!((get("b") - 0.26234753829797997).abs() < 1e-12);
    assert!((get("c_a") - 1.0 / 0.07).abs() < 1e-9);
}

#[test]
fn psi_at_zero_delay_is_phi() {
    let dir = tempfile::tempdir().unwrap();
    let phi = srl(dir.path(), &["oracle", "--what", "phi", "--x=-6..4", "--points", "41"]);
    let psi = srl(dir.path(), &["oracle", "--what", "psi", "--q", "0", "--x=-6..4", "--points", "41"]);
    assert!(phi.status.success() && psi.status.success());
    assert_eq!(stdout(&phi), stdout(&psi));
}

#[test]
fn gamma_is_decreasing_in_unit_interval() {
    let dir = tempfile::tempdir().unwrap();
    let o = srl(dir.path(), &["oracle", "--what", "gamma", "--x=-8..4", "--points", "60"]);
    let g = values(&stdout(&o));
    assert_eq!(g.len(), 60);
    assert!(g.iter().all(|&v| v > 0.0 && v < 1.0));
    assert!(g.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn oracle_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = srl(dir.path(), &["oracle", "--what", "v", "--x", "0,1", "--z", "0.3,0.6", "--out", "v.csv"]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("v.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("x,z,value"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn train_writes_log_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.txt"), SMALL).unwrap();
    let o = srl(dir.path(), &["train", "--config", "small.txt", "--mode", "randomized", "--out-dir", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let run = dir.path().join("run");
    let log = std::fs::read_to_string(run.join("episodes.csv")).unwrap();
    assert_eq!(
        log.lines().next(),
        Some("m,theta1,theta2,theta3,x_bar,linf_error,activation_time,total_cost")
    );
    assert_eq!(log.lines().count(), 5);
    let manifest = std::fs::read_to_string(run.join("manifest.txt")).unwrap();
    assert!(manifest.contains("mode = randomized"));
    assert!(manifest.contains("config_hash = "));
    assert!(manifest.contains("run_seed = 0"));
}

#[test]
fn randomized_log_marks_inactive_episodes() {
    let dir = tempfile::tempdir().unwrap();
    // Small λ pushes Γ toward 0, so the coin almost never lands.
    std::fs::write(dir.path().join("c.txt"), format!("{SMALL}lambda = 0.01\n")).unwrap();
    let o = srl(dir.path(), &["train", "--config", "c.txt", "--mode", "randomized", "--out-dir", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let log = std::fs::read_to_string(dir.path().join("run/episodes.csv")).unwrap();
    assert!(log.lines().skip(1).any(|l| l.split(',').nth(6) == Some("inf")), "{log}");
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.txt"), format!("{SMALL}seed = 3\n")).unwrap();
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_srl"));
        c.current_dir(dir.path()).env("RUST_LOG", "warn").env_remove("SRL_SEED");
        c.args(["train", "--config", "small.txt"]);
        if let Some(s) = env {
            c.env("SRL_SEED", s);
        }
        if let Some(s) = flag {
            c.args(["--seed", s]);
        }
        c.output().unwrap()
    };
    assert!(run(None, None).status.success());
    assert!(dir.path().join("runs/benchmark-seed3/episodes.csv").exists());
    assert!(run(Some("5"), None).status.success());
    assert!(dir.path().join("runs/benchmark-seed5/episodes.csv").exists());
    assert!(run(Some("5"), Some("9")).status.success());
    assert!(dir.path().join("runs/benchmark-seed9/episodes.csv").exists());
    assert_eq!(run(Some("x"), None).status.code(), Some(2));

    let a = std::fs::read_to_string(dir.path().join("runs/benchmark-seed5/episodes.csv")).unwrap();
    assert!(run(None, Some("5")).status.success());
    let b = std::fs::read_to_string(dir.path().join("runs/benchmark-seed5/episodes.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn figures_combine_two_runs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.txt"), SMALL).unwrap();
    for mode in ["benchmark", "randomized"] {
        let o = srl(dir.path(), &["train", "--config", "small.txt", "--mode", mode, "--out-dir", mode]);
        assert!(o.status.success());
    }
    let o = srl(dir.path(), &["figures", "--run-dir", "benchmark", "--compare", "randomized"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("mode,episode,series,value"));
    for mode in ["benchmark", "randomized"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{mode},4,x_bar,"))));
        assert!(text.lines().any(|l| l.starts_with(&format!("{mode},1,theta2_true,0.26234753829797997"))));
    }
}

#[test]
fn figures_reject_missing_or_empty_runs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(srl(dir.path(), &["figures", "--run-dir", "absent"]).status.code(), Some(2));
    let run = dir.path().join("empty");
    std::fs::create_dir(&run).unwrap();
    std::fs::write(run.join("config.txt"), SMALL).unwrap();
    std::fs::write(run.join("episodes.csv"), "").unwrap();
    assert_eq!(srl(dir.path(), &["figures", "--run-dir", "empty"]).status.code(), Some(2));
}
