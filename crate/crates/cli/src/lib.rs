// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

//! Config-driven runner around the `qsf` library: every subcommand reads one
//! TOML scenario, writes a manifest first and then its reports.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod scenario;

use std::path::Path;

pub use commands::Command;
use config::ScenarioConfig;
pub use error::{CliError, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC};
use output::{Manifest, OutDir};
use scenario::Scenario;

/// Prefix of environment variables that override config keys.
pub const ENV_PREFIX: &str = "QSF__";

/// Options shared by every subcommand.
#[derive(Clone, Debug)]
pub struct Invocation<'a> {
    pub config: &'a Path,
    pub out: Option<&'a Path>,
    pub seed: Option<u64>,
    /// `(name, value)` pairs; only names starting with [`ENV_PREFIX`] are used.
    pub env: Vec<(String, String)>,
}

/// What a finished run produced.
#[derive(Debug)]
pub struct Outcome {
    pub checks: Vec<checks::Check>,
    pub files: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if checks::all_pass(&self.checks) {
            0
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

pub fn run(cmd: Command, inv: &Invocation<'_>) -> Result<Outcome, CliError> {
    let bytes = std::fs::read(inv.config).map_err(|e| CliError::Io(format!("{}: {e}", inv.config.display())))?;
    let source = String::from_utf8(bytes.clone()).map_err(|e| {
        CliError::Config(config::ConfigError {
            block: "file".into(),
            line: None,
            message: format!("not UTF-8: {e}"),
        })
    })?;
    let mut env: Vec<(String, String)> = inv
        .env
        .iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX))
        .cloned()
        .collect();
    env.sort();
    let (mut cfg, applied) = ScenarioConfig::parse(&source, &env)?;
    if let Some(seed) = inv.seed {
        cfg.run.seed = seed;
    }
    let out_root = inv
        .out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output.dir.clone().into());
    let mut out = OutDir::create(&out_root)?;
    let sc = Scenario::build(cfg)?;
    let config_path = inv.config.display().to_string();
    let manifest = Manifest {
        tool: "qsf",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: cmd.name(),
        config_path: &config_path,
        config_sha256: output::sha256_hex(&bytes),
        env_overrides: &applied,
        seed: sc.cfg.run.seed,
        config: &sc.cfg,
        resolved: &sc.resolved,
    };
    out.write_json("manifest.json", &manifest)?;
    let checks = commands::run(cmd, &sc, sc.cfg.run.seed, &mut out)?;
    Ok(Outcome {
        checks,
        files: out.written,
    })
}
