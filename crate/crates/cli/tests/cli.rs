// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command as Process, Output};

use qsf_cli::config::ScenarioConfig;
use qsf_cli::{run, Command, Invocation};

const SMALL: &str = r#"
[model]
modes = 2
max_particles = 2
statistics = "bose"
potential = "gaussian"
strength = 0.3

[discretization]
cells = 2

[run]
seed = 3
beta = [0.8, 1.2]
mu = [-0.5, -0.5]
step = 0.05
steps = 6
lag_step = 0.05
lag_count = 40
"#;

fn write_config(dir: &Path, source: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, source).unwrap();
    path
}

fn qsf(args: &[&str], config: &Path, out: &Path, env: &[(&str, &str)]) -> Output {
    let mut cmd = Process::new(env!("CARGO_BIN_EXE_qsf"));
    cmd.args(args).arg("--config").arg(config).arg("--out").arg(out);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn parse_err(source: &str) -> qsf_cli::config::ConfigError {
    ScenarioConfig::parse(source, &[]).unwrap_err()
}

#[test]
fn unknown_keys_are_rejected_with_their_line() {
    let source = SMALL.replace("strength = 0.3", "strength = 0.3\nstrenght = 0.4");
    let e = parse_err(&source);
    assert_eq!(e.block, "model");
    assert_eq!(e.line, Some(8));
    assert!(e.message.contains("strenght"), "{e}");

    let dir = tempfile::tempdir().unwrap();
    let out = qsf(
        &["evolve-closed"],
        &write_config(dir.path(), &source),
        &dir.path().join("o"),
        &[],
    );
    assert_eq!(out.status.code(), Some(qsf_cli::EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 8"));
}

#[test]
fn regularization_order_is_enforced() {
    let source = format!("{SMALL}\n[regularization]\neta = 0.1\nepsilon = 0.2\n");
    let e = parse_err(&source);
    assert_eq!(e.block, "regularization");
    assert!(e.line.is_some());

    let dir = tempfile::tempdir().unwrap();
    let out = qsf(
        &["generator"],
        &write_config(dir.path(), &source),
        &dir.path().join("o"),
        &[],
    );
    assert_eq!(out.status.code(), Some(qsf_cli::EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("regularization"));
    assert!(!dir.path().join("o").join("manifest.json").exists());
}

#[test]
fn validation_catches_inconsistent_blocks() {
    let e = parse_err(&SMALL.replace("beta = [0.8, 1.2]", "beta = [0.8]"));
    assert_eq!(e.block, "run");
    let e = parse_err(
        &SMALL
            .replace("\"bose\"", "\"fermi\"")
            .replace("max_particles = 2", "max_particles = 3"),
    );
    assert_eq!(e.block, "model");
    let e = parse_err(&SMALL.replace("step = 0.05", "step = -0.05"));
    assert_eq!(e.block, "run");
    let e = parse_err(&format!("{SMALL}\n[modle]\nmodes = 3\n"));
    assert_eq!((e.block.as_str(), e.line), ("modle", Some(21)));
    let e = parse_err(&SMALL.replace("[run]", "[run\n"));
    assert_eq!(e.block, "syntax");
    assert!(e.line.is_some());
}

#[test]
fn environment_overrides_reach_the_manifest() {
    let env = vec![
        ("QSF__RUN__STEPS".to_string(), "2".to_string()),
        ("QSF__MODEL__STRENGTH".to_string(), "0.1".to_string()),
        ("PATH".to_string(), "/bin".to_string()),
    ];
    let (cfg, applied) = ScenarioConfig::parse(SMALL, &env).unwrap();
    assert_eq!(cfg.run.steps, 2);
    assert_eq!(cfg.model.strength, 0.1);
    assert_eq!(applied, ["run.steps", "model.strength"]);
    assert!(ScenarioConfig::parse(SMALL, &[("QSF__RUN".into(), "1".into())]).is_err());

    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().join("o");
    let res = qsf(
        &["evolve-closed", "--quiet"],
        &config,
        &out,
        &[("QSF__RUN__STEPS", "2")],
    );
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["run"]["steps"], 2);
    assert_eq!(manifest["env_overrides"][0], "run.steps");
    let csv = std::fs::read_to_string(out.join("trajectory_closed.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3);
}

#[test]
fn manifest_is_written_first_and_records_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().join("o");
    let inv = Invocation {
        config: &config,
        out: Some(&out),
        seed: Some(99),
        env: Vec::new(),
    };
    let outcome = run(Command::EvolveExact, &inv).unwrap();
    assert_eq!(outcome.files[0], "manifest.json");
    assert_eq!(outcome.exit_code(), 0);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 99);
    assert_eq!(manifest["subcommand"], "evolve-exact");
    assert_eq!(manifest["config_sha256"], qsf_cli::output::sha256_hex(SMALL.as_bytes()));
    assert_eq!(manifest["resolved"]["dimension"], 6);
    assert!(!manifest.to_string().contains("time"), "no timestamps");

    // A numeric failure after setup still leaves the manifest behind.
    let config = write_config(dir.path(), &SMALL.replace("lag_count = 40", "lag_count = 2"));
    let out = dir.path().join("fail");
    let res = qsf(&["evolve-memory"], &config, &out, &[]);
    assert_eq!(res.status.code(), Some(qsf_cli::EXIT_NUMERIC));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn plot_files_have_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().join("o");
    for cmd in ["evolve-closed", "correlations"] {
        let res = qsf(&[cmd, "--quiet"], &config, &out, &[]);
        assert!(res.status.success(), "{cmd}: {}", String::from_utf8_lossy(&res.stderr));
    }
    let columns = |name: &str| -> Vec<usize> {
        std::fs::read_to_string(out.join(name))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.split_whitespace().count())
            .collect()
    };
    let traj = columns("trajectory_closed.dat");
    assert_eq!(traj.len(), 7);
    assert!(traj.iter().all(|&n| n == 1 + 6 * 2 + 1));
    let corr = columns("correlation.dat");
    assert_eq!(corr.len(), 40);
    assert!(corr.iter().all(|&n| n == 3));
    let readme = std::fs::read_to_string(out.join("trajectory_closed.README.txt")).unwrap();
    assert!(readme.contains("beta_1"));
}

#[test]
fn formats_select_csv_and_plot_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let source = format!("{SMALL}\n[output]\nformats = []\n");
    let out = dir.path().join("o");
    let res = qsf(
        &["evolve-closed", "--quiet"],
        &write_config(dir.path(), &source),
        &out,
        &[],
    );
    assert!(res.status.success());
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["manifest.json", "trajectory_closed.json"]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let read = |out: &Path| {
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    for cmd in ["evolve-kinetic", "generator"] {
        let a = dir.path().join(format!("{cmd}-a"));
        let b = dir.path().join(format!("{cmd}-b"));
        for out in [&a, &b] {
            assert!(qsf(&[cmd, "--quiet"], &config, out, &[]).status.code().is_some());
        }
        assert_eq!(read(&a), read(&b), "{cmd}");
    }
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let res = qsf(&["check"], &dir.path().join("absent.toml"), &dir.path().join("o"), &[]);
    assert_eq!(res.status.code(), Some(qsf_cli::EXIT_IO));
}

#[test]
fn default_check_fails_only_on_kinetic_energy_drift() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("config/default.toml");
    let dir = tempfile::tempdir().unwrap();
    let res = qsf(&["check"], &config, dir.path(), &[]);
    assert_eq!(res.status.code(), Some(qsf_cli::EXIT_CHECK_FAILED));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("check.json")).unwrap()).unwrap();
    let failing: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["id"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["kinetic-refreshed/energy-drift-rate"]);
    assert!(report["checks"].as_array().unwrap().len() > 20);
}
