// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

//! Manifest, report and plot-data writers. Everything written here is a
//! pure function of its inputs, so identical runs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use qsf::dynamics::{CorrelationSeries, Quantity, Trajectory};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::scenario::Resolved;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub config_path: &'a str,
    /// SHA-256 of the config file bytes.
    pub config_sha256: String,
    pub env_overrides: &'a [String],
    pub seed: u64,
    /// The effective config after overrides.
    pub config: &'a ScenarioConfig,
    pub resolved: &'a Resolved,
}

/// An output directory that records what it has written.
pub struct OutDir {
    root: PathBuf,
    pub written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

/// A plot-data file and its column description.
pub struct PlotData {
    pub table: String,
    pub readme: String,
}

fn sidecar(title: &str, columns: &[(String, String)]) -> String {
    let mut s =
        format!("{title}\n\nWhitespace-separated columns, one row per sample; lines starting with # are comments.\n\n");
    for (i, (name, what)) in columns.iter().enumerate() {
        s.push_str(&format!("{:>3}  {name:<12} {what}\n", i + 1));
    }
    s
}

/// Trajectory plot data: the CSV columns, whitespace-separated.
pub fn trajectory_plot(tr: &Trajectory<f64>) -> PlotData {
    let csv = tr.to_csv();
    let mut lines = csv.lines();
    let header: Vec<String> = lines.next().unwrap_or("").split(',').map(str::to_string).collect();
    let mut table = format!("# {}\n", header.join(" "));
    for line in lines {
        table.push_str(&line.replace(',', " "));
        table.push('\n');
    }
    let columns: Vec<(String, String)> = header
        .iter()
        .map(|h| {
            let (name, cell) = h.split_once('_').unwrap_or((h.as_str(), ""));
            let what = match name {
                "t" => "time".to_string(),
                "beta" => format!("inverse temperature of cell {cell}"),
                "mu" => format!("chemical potential of cell {cell}"),
                "v" => format!("velocity of cell {cell}"),
                "E" => format!("energy of cell {cell}"),
                "M" => format!("mass of cell {cell}"),
                "P" => format!("momentum of cell {cell}"),
                "f" => format!("phase-space density at grid point {cell} (position-major)"),
                "entropy" => "von Neumann entropy of the accompanying state".to_string(),
                _ => String::new(),
            };
            (h.clone(), what)
        })
        .collect();
    let hydro = tr.slots.iter().all(|(_, q)| !matches!(q, Quantity::Density(_)));
    let title = format!(
        "Trajectory `{}`: {} records, {} cells ({} set).",
        tr.label,
        tr.len(),
        tr.cells,
        if hydro { "hydrodynamic" } else { "phase-space" }
    );
    PlotData {
        readme: sidecar(&title, &columns),
        table,
    }
}

pub fn correlation_plot(series: &CorrelationSeries) -> PlotData {
    let columns = vec![
        ("tau".to_string(), "lag".to_string()),
        ("re".to_string(), "real part of C(tau)".to_string()),
        ("im".to_string(), "imaginary part of C(tau)".to_string()),
    ];
    PlotData {
        table: series.to_text(),
        readme: sidecar("Connected autocorrelation of the interface mass current.", &columns),
    }
}

/// Arbitrary named columns, e.g. spectra.
pub fn columns_plot(title: &str, columns: &[(&str, &str)], rows: &[Vec<f64>]) -> PlotData {
    let mut table = format!("# {}\n", columns.iter().map(|c| c.0).collect::<Vec<_>>().join(" "));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        table.push_str(&cells.join(" "));
        table.push('\n');
    }
    let described: Vec<(String, String)> = columns.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    PlotData {
        readme: sidecar(title, &described),
        table,
    }
}

impl OutDir {
    /// Writes `<stem>.dat` and `<stem>.README.txt`.
    pub fn write_plot(&mut self, stem: &str, plot: &PlotData) -> Result<(), CliError> {
        self.write(&format!("{stem}.dat"), plot.table.as_bytes())?;
        self.write(&format!("{stem}.README.txt"), plot.readme.as_bytes())
    }
}
