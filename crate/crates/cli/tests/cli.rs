use std::path::Path;
use std::process::{Command, Output};

use logchain::RunConfig;
use logistic_chain::trajectory_io;

fn logchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logchain"))
        .args(args)
        .env_remove(logchain::OUT_DIR_ENV)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn stationary_csv_header_and_mass() {
    let o = logchain(&["stationary", "--b", "2", "--mu", "1", "--gamma", "1", "--L", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "x,pi,gauss,ratio");
    let mass: f64 = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((mass - 1.0).abs() < 1e-12, "mass {mass}");
}

#[test]
fn simulate_is_deterministic_under_seed() {
    let args = ["simulate", "--L", "30", "--t-end", "2", "--seed", "42"];
    let a = logchain(&args);
    let b = logchain(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("# config: seed=42\n"));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let run = |threads: &str| {
        logchain(&[
            "passage-mc", "--L", "40", "--targets", "30,50", "--reps", "300", "--seed", "7", "--threads", threads,
        ])
    };
    let one = run("1");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, run("3").stdout);
}

#[test]
fn generated_seed_is_reported_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let o = logchain(&["simulate", "--L", "20", "--t-end", "1", "-o", first.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("seed: "), "{err}");
    let text = std::fs::read_to_string(&first).unwrap();
    assert!(RunConfig::from_header(&text).unwrap().get("seed").is_some());
    let again = logchain(&["simulate", "--config", first.to_str().unwrap()]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn header_round_trips_through_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = logchain(&[
        "stationary", "--b", "3", "--mu", "0.5", "--gamma", "2", "--L", "40", "--x-max", "10", "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let cfg = RunConfig::from_header(&text).unwrap();
    assert_eq!(cfg.command, "stationary");
    assert_eq!(cfg.get("b"), Some("3"));
    assert_eq!(cfg.get("x_max"), Some("10"));
    assert_eq!(cfg.get("tail_tol"), Some("1e-15"));

    // Echoed header as a config file reproduces the run exactly.
    let again = logchain(&["stationary", "--config", out.to_str().unwrap()]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn json_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.json");
    let o = logchain(&["hypergeom", "--A", "50", "--z", "60", "--format", "json", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let cfg = RunConfig::from_json(&doc).unwrap();
    assert_eq!(cfg.get("A"), Some("50"));
    let again = logchain(&["hypergeom", "--config", out.to_str().unwrap()]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# base settings\nb = 3\nL = 60\nx-max = 5\n").unwrap();
    let o = logchain(&["stationary", "--config", cfg.to_str().unwrap(), "--b", "2.5"]);
    assert_eq!(o.status.code(), Some(0));
    let got = RunConfig::from_header(&stdout(&o)).unwrap();
    assert_eq!(got.get("b"), Some("2.5"));
    assert_eq!(got.get("L"), Some("60"));
    assert_eq!(got.get("x_max"), Some("5"));
    assert_eq!(got.get("mu"), Some("1"));
}

#[test]
fn json_numbers_carry_17_significant_digits() {
    let o = logchain(&["stationary", "--L", "20", "--x-max", "3", "--format", "json"]);
    let text = stdout(&o);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 4);
    let pi_line = text.lines().find(|l| l.contains("\"pi\"")).unwrap();
    let raw = pi_line.split("\"pi\": ").nth(1).unwrap().split(',').next().unwrap();
    let mantissa = raw.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{raw}");
}

#[test]
fn exit_codes() {
    // Usage errors.
    assert_eq!(logchain(&["stationary", "--bogus"]).status.code(), Some(2));
    assert_eq!(logchain(&["stationary", "--b", "0.5"]).status.code(), Some(2));
    assert_eq!(logchain(&["hypergeom", "--A", "10"]).status.code(), Some(2));
    assert_eq!(logchain(&["simulate", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(logchain(&["validate", "--only", "99"]).status.code(), Some(2));
    let o = logchain(&["stationary", "--variant", "unmodified"]);
    assert_eq!(o.status.code(), Some(2));
    // Numeric errors name the failing operation.
    let o = logchain(&["passage", "--mode", "passage", "--x", "3", "--y", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("mean_passage"));
    // Help is not an error.
    assert_eq!(logchain(&["--help"]).status.code(), Some(0));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let o = logchain(&["stationary", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let cfg2 = dir.path().join("typo.conf");
    std::fs::write(&cfg2, "b = two\n").unwrap();
    assert_eq!(logchain(&["stationary", "--config", cfg2.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_logchain"))
        .args(["stationary", "--L", "10"])
        .env(logchain::OUT_DIR_ENV, dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("stationary.csv")).unwrap();
    assert!(text.contains("\nx,pi,gauss,ratio\n"));
    // out_dir is a destination, not a setting: it stays out of the header.
    assert!(!text.contains("out_dir"));

    let o = Command::new(env!("CARGO_BIN_EXE_logchain"))
        .args(["stationary", "--L", "10", "-o", "nested/s.csv"])
        .env(logchain::OUT_DIR_ENV, dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(Path::new(&dir.path().join("nested/s.csv")).exists());
}

#[test]
fn binary_trajectory_matches_csv() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("t.bin");
    let common = ["simulate", "--L", "25", "--t-end", "3", "--seed", "11"];
    let mut args = common.to_vec();
    args.extend(["--format", "bin", "-o", bin.to_str().unwrap()]);
    assert_eq!(logchain(&args).status.code(), Some(0));
    let traj = trajectory_io::decode(&std::fs::read(&bin).unwrap()).unwrap();
    assert_eq!(traj.seed, 11);
    assert_eq!(traj.params.l, 25);

    let csv = stdout(&logchain(&common));
    let rows: Vec<(f64, u64)> = data_lines(&csv)[1..]
        .iter()
        .map(|l| {
            let (t, s) = l.split_once(',').unwrap();
            (t.parse().unwrap(), s.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), traj.events.len());
    for (e, (t, s)) in traj.events.iter().zip(rows) {
        assert_eq!(e.time, t);
        assert_eq!(e.state, s);
    }
}

#[test]
fn passage_mc_agrees_with_exact_mean() {
    let o = logchain(&["passage-mc", "--L", "30", "--targets", "20,40", "--reps", "4000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let z = doc["summary"]["z_score"].as_f64().unwrap();
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn validate_exit_status_follows_requested_checks() {
    let ok = logchain(&["validate", "--quick", "--only", "1,3,4"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert_eq!(stdout(&ok).matches("[PASS]").count(), 3);
    let failing = logchain(&["validate", "--quick", "--only", "2"]);
    assert_eq!(failing.status.code(), Some(1));
    assert!(stdout(&failing).contains("[FAIL] 2"));
}

#[test]
fn every_subcommand_runs() {
    let cases: &[&[&str]] = &[
        &["ldcheck", "--sizes", "500", "--deltas", "0.2"],
        &["passage", "--mode", "zero", "--L", "30"],
        &["passage", "--mode", "step", "--y", "60", "--L", "40"],
        &["passage", "--mode", "recurrence", "--k", "30", "--L", "40"],
        &["lattice", "--L", "8", "--t-end", "1", "--seed", "1"],
        &["limits", "--L", "200", "--reps", "50", "--seed", "1", "--steps", "2"],
        &["breiman", "--m-max", "3"],
    ];
    for args in cases {
        let o = logchain(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        assert!(text.starts_with(&format!("# logchain {}\n", args[0])), "{text}");
    }
}
