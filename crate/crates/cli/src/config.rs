// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scenario configuration: a strict TOML schema with per-block validation
//! and environment overrides.

use std::f64::consts::PI;
use std::fmt;

use qsf::fock::Statistics;
use qsf::model::{PotentialKind, PovmNormalization};
use qsf::scattering::PauliMode;
use serde::{Deserialize, Serialize};

/// Environment variables `QSF__<BLOCK>__<KEY>` override config keys.
pub const ENV_PREFIX: &str = "QSF__";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub regularization: RegularizationConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub modes: usize,
    pub max_particles: usize,
    pub statistics: Statistics,
    #[serde(default = "default_length")]
    pub box_length: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    pub potential: PotentialKind,
    pub strength: f64,
    /// Defaults to a tenth of the box.
    pub range: Option<f64>,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    /// Defaults to one cell per run-block β entry.
    pub cells: Option<usize>,
    pub cell_quad_order: Option<usize>,
    /// Phase-space grid; defaults to 4M positions and 8M momenta.
    pub positions: Option<usize>,
    pub momenta: Option<usize>,
    pub sigma: Option<f64>,
    pub p_max: Option<f64>,
    #[serde(default)]
    pub normalization: PovmNormalization,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OccupationMode {
    /// Rebuild the generator from the accompanying state every step.
    #[default]
    Refresh,
    /// Occupations of the initial state throughout.
    Frozen,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationConfig {
    /// Defaults to a tenth of the single-particle bandwidth over ħ.
    pub eta: Option<f64>,
    /// Defaults to η/10.
    pub epsilon: Option<f64>,
    pub tau1: Option<f64>,
    #[serde(default)]
    pub pauli: PauliMode,
    #[serde(default)]
    pub occupations: OccupationMode,
    #[serde(default = "yes")]
    pub mass_conserving_gamma: bool,
}

impl Default for RegularizationConfig {
    fn default() -> Self {
        Self {
            eta: None,
            epsilon: None,
            tau1: None,
            pauli: PauliMode::default(),
            occupations: OccupationMode::default(),
            mass_conserving_gamma: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_damping_floor")]
    pub damping_floor: f64,
    #[serde(default = "default_singular_cut")]
    pub singular_cut: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
            max_iterations: default_iterations(),
            damping_floor: default_damping_floor(),
            singular_cut: default_singular_cut(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelevantKind {
    #[default]
    Hydro,
    PhaseSpace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub beta: Vec<f64>,
    pub mu: Vec<f64>,
    /// Defaults to rest in every cell.
    pub velocity: Option<Vec<f64>>,
    pub step: f64,
    pub steps: usize,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    /// Memory window; estimated from the interface-current correlation when
    /// absent.
    pub tau_c: Option<f64>,
    pub lag_step: f64,
    pub lag_count: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "one")]
    pub history_duration: f64,
    #[serde(default = "default_history_bound")]
    pub history_bound: f64,
    #[serde(default)]
    pub relevant: RelevantKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

/// Optional artifact formats. JSON reports and the manifest are always
/// written.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Plot,
}

fn default_length() -> f64 {
    PI
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_quad_order() -> usize {
    32
}
fn default_tolerance() -> f64 {
    1e-11
}
fn default_iterations() -> usize {
    200
}
fn default_damping_floor() -> f64 {
    2f64.powi(-20)
}
fn default_singular_cut() -> f64 {
    1e-13
}
fn default_trials() -> usize {
    200
}
fn default_history_bound() -> f64 {
    1e-6
}
fn default_dir() -> String {
    "out".into()
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Plot]
}

/// A schema violation, anchored to a line of the config file when possible.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub block: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: [{}] {}", self.block, self.message),
            None => write!(f, "[{}] {}", self.block, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line of `key` inside `[block]`, or of the block header.
fn locate(source: &str, block: &str, key: Option<&str>) -> Option<usize> {
    let header = format!("[{block}]");
    let mut in_block = false;
    let mut header_line = None;
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            in_block = line == header;
            if in_block {
                header_line = Some(i + 1);
            }
            continue;
        }
        if in_block {
            if let Some(k) = key {
                let name = line.split('=').next().unwrap_or("").trim();
                if name == k {
                    return Some(i + 1);
                }
            }
        }
    }
    header_line
}

fn block_error<T: serde::de::DeserializeOwned>(
    table: &toml::Table,
    block: &'static str,
) -> Option<(&'static str, toml::de::Error)> {
    table.get(block)?.clone().try_into::<T>().err().map(|e| (block, e))
}

fn line_of_offset(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

impl ScenarioConfig {
    /// Parses `source`, applies `QSF__BLOCK__KEY=value` overrides from `env`
    /// and validates the result.
    pub fn parse(source: &str, env: &[(String, String)]) -> Result<(Self, Vec<String>), ConfigError> {
        let mut table: toml::Table = toml::from_str(source).map_err(|e| ConfigError {
            block: "syntax".into(),
            line: e.span().map(|s| line_of_offset(source, s.start)),
            message: e.message().to_string(),
        })?;
        let mut applied = Vec::new();
        for (name, value) in env {
            let Some(path) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let parts: Vec<String> = path.split("__").map(|p| p.to_ascii_lowercase()).collect();
            let [block, key] = parts.as_slice() else {
                return Err(ConfigError {
                    block: "environment".into(),
                    line: None,
                    message: format!("{name}: expected {ENV_PREFIX}<BLOCK>__<KEY>"),
                });
            };
            let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {value}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(value.clone()));
            let entry = table
                .entry(block.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match entry {
                toml::Value::Table(t) => {
                    t.insert(key.clone(), parsed);
                }
                _ => {
                    return Err(ConfigError {
                        block: block.clone(),
                        line: None,
                        message: format!("{name}: `{block}` is not a block"),
                    })
                }
            }
            applied.push(format!("{block}.{key}"));
        }
        const BLOCKS: [&str; 6] = ["model", "discretization", "regularization", "solver", "run", "output"];
        if let Some(unknown) = table.keys().find(|k| !BLOCKS.contains(&k.as_str())) {
            return Err(ConfigError {
                line: locate(source, unknown, None),
                block: unknown.clone(),
                message: format!("unknown block; expected one of {}", BLOCKS.join(", ")),
            });
        }
        // Blocks are checked one at a time so an error names its block.
        let blame = block_error::<ModelConfig>(&table, "model")
            .or_else(|| block_error::<DiscretizationConfig>(&table, "discretization"))
            .or_else(|| block_error::<RegularizationConfig>(&table, "regularization"))
            .or_else(|| block_error::<SolverConfig>(&table, "solver"))
            .or_else(|| block_error::<RunConfig>(&table, "run"))
            .or_else(|| block_error::<OutputConfig>(&table, "output"));
        if let Some((block, e)) = blame {
            let message = e.message().to_string();
            let key = message.split('`').nth(1);
            return Err(ConfigError {
                line: locate(source, block, key),
                block: block.to_string(),
                message,
            });
        }
        let cfg: ScenarioConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError {
                block: "schema".into(),
                line: None,
                message: e.message().to_string(),
            })?;
        cfg.validate(source)?;
        Ok((cfg, applied))
    }

    pub fn cells(&self) -> usize {
        self.discretization.cells.unwrap_or(self.run.beta.len())
    }

    pub fn velocity(&self) -> Vec<f64> {
        self.run.velocity.clone().unwrap_or_else(|| vec![0.0; self.cells()])
    }

    pub fn range(&self) -> f64 {
        self.model.range.unwrap_or(self.model.box_length / 10.0)
    }

    fn validate(&self, source: &str) -> Result<(), ConfigError> {
        let fail = |block: &str, key: &str, message: String| ConfigError {
            block: block.into(),
            line: locate(source, block, Some(key)),
            message,
        };
        let m = &self.model;
        if m.modes == 0 {
            return Err(fail("model", "modes", "modes must be at least 1".into()));
        }
        if m.max_particles == 0 {
            return Err(fail(
                "model",
                "max_particles",
                "max_particles must be at least 1".into(),
            ));
        }
        if m.statistics == Statistics::Fermi && m.max_particles > m.modes {
            return Err(fail(
                "model",
                "max_particles",
                format!(
                    "fermions need max_particles ≤ modes, got {} > {}",
                    m.max_particles, m.modes
                ),
            ));
        }
        for (key, v) in [("box_length", m.box_length), ("mass", m.mass), ("hbar", m.hbar)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(fail("model", key, format!("{key} must be positive, got {v}")));
            }
        }
        if !(m.strength >= 0.0 && m.strength.is_finite()) {
            return Err(fail(
                "model",
                "strength",
                format!("strength must be ≥ 0, got {}", m.strength),
            ));
        }
        if let Some(r) = m.range {
            if !(r > 0.0 && r.is_finite()) {
                return Err(fail("model", "range", format!("range must be positive, got {r}")));
            }
        }
        if m.quad_order < 2 * m.modes {
            return Err(fail(
                "model",
                "quad_order",
                format!("quad_order must be at least 2·modes = {}", 2 * m.modes),
            ));
        }
        let d = &self.discretization;
        let cells = self.cells();
        if cells == 0 {
            return Err(fail("discretization", "cells", "need at least one cell".into()));
        }
        if d.cell_quad_order.is_some_and(|q| q < 2) {
            return Err(fail(
                "discretization",
                "cell_quad_order",
                "cell_quad_order must be at least 2".into(),
            ));
        }
        for (key, v) in [("positions", d.positions), ("momenta", d.momenta)] {
            if v == Some(0) {
                return Err(fail("discretization", key, format!("{key} must be positive")));
            }
        }
        for (key, v) in [("sigma", d.sigma), ("p_max", d.p_max)] {
            if v.is_some_and(|x| !(x > 0.0 && x.is_finite())) {
                return Err(fail("discretization", key, format!("{key} must be positive")));
            }
        }
        let r = &self.regularization;
        for (key, v) in [("eta", r.eta), ("epsilon", r.epsilon), ("tau1", r.tau1)] {
            if v.is_some_and(|x| !(x > 0.0 && x.is_finite())) {
                return Err(fail("regularization", key, format!("{key} must be positive")));
            }
        }
        if let (Some(eta), Some(eps)) = (r.eta, r.epsilon) {
            if eps >= eta {
                return Err(fail(
                    "regularization",
                    "epsilon",
                    format!("need η > ε, got η = {eta}, ε = {eps}"),
                ));
            }
        }
        if r.eta.is_none() && r.epsilon.is_some() {
            return Err(fail("regularization", "epsilon", "epsilon given without eta".into()));
        }
        let s = &self.solver;
        for (key, v) in [
            ("tolerance", s.tolerance),
            ("damping_floor", s.damping_floor),
            ("singular_cut", s.singular_cut),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(fail("solver", key, format!("{key} must lie in (0, 1), got {v}")));
            }
        }
        if s.max_iterations == 0 {
            return Err(fail(
                "solver",
                "max_iterations",
                "max_iterations must be positive".into(),
            ));
        }
        let run = &self.run;
        for (key, len) in [
            ("beta", run.beta.len()),
            ("mu", run.mu.len()),
            ("velocity", self.velocity().len()),
        ] {
            if len != cells {
                return Err(fail("run", key, format!("{key} has {len} entries for {cells} cells")));
            }
        }
        if let Some(b) = run.beta.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(fail("run", "beta", format!("β must be positive, got {b}")));
        }
        for (key, v) in [
            ("step", run.step),
            ("lag_step", run.lag_step),
            ("history_bound", run.history_bound),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(fail("run", key, format!("{key} must be positive, got {v}")));
            }
        }
        if !(run.history_duration >= 0.0 && run.history_duration.is_finite()) {
            return Err(fail("run", "history_duration", "history_duration must be ≥ 0".into()));
        }
        if run.tau_c.is_some_and(|t| !(t >= 0.0 && t.is_finite())) {
            return Err(fail("run", "tau_c", "tau_c must be ≥ 0".into()));
        }
        if run.record_every == 0 {
            return Err(fail("run", "record_every", "record_every must be positive".into()));
        }
        if self.output.dir.is_empty() {
            return Err(fail("output", "dir", "output directory must not be empty".into()));
        }
        Ok(())
    }
}
