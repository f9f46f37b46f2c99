// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsf_cli::{run, Command, Invocation};

#[derive(Parser)]
#[command(name = "qsf", version, about = "Cell-resolved quantum statistical flows in a box")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML.
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// RNG seed (overrides run.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the per-check summary.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every invariant suite and write check.json.
    Check(Common),
    /// Exact unitary evolution with re-inverted hydrodynamic state.
    EvolveExact(Common),
    /// Markovian closed hydrodynamics.
    EvolveClosed(Common),
    /// Closed hydrodynamics with a finite memory window.
    EvolveMemory(Common),
    /// Kinetic closure driven by the irreversible generator.
    EvolveKinetic(Common),
    /// Interface current autocorrelation and recurrence.
    Correlations(Common),
    /// T-matrix spectra, Born order and Lippmann-Schwinger agreement.
    Tmatrix(Common),
    /// Generator audits: positivity, stationarity, conservation.
    Generator(Common),
    /// Reconstruct an evolved state from its multiplier history.
    VerifyHistory(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Cmd::Check(c) => (Command::Check, c),
        Cmd::EvolveExact(c) => (Command::EvolveExact, c),
        Cmd::EvolveClosed(c) => (Command::EvolveClosed, c),
        Cmd::EvolveMemory(c) => (Command::EvolveMemory, c),
        Cmd::EvolveKinetic(c) => (Command::EvolveKinetic, c),
        Cmd::Correlations(c) => (Command::Correlations, c),
        Cmd::Tmatrix(c) => (Command::Tmatrix, c),
        Cmd::Generator(c) => (Command::Generator, c),
        Cmd::VerifyHistory(c) => (Command::VerifyHistory, c),
    };
    let inv = Invocation {
        config: &common.config,
        out: common.out.as_deref(),
        seed: common.seed,
        env: std::env::vars().collect(),
    };
    match run(cmd, &inv) {
        Ok(outcome) => {
            if !common.quiet {
                for c in &outcome.checks {
                    let status = if c.passed { "ok  " } else { "FAIL" };
                    println!("{status} {} = {:.3e} ({} {:.1e})", c.id, c.value, c.relation, c.limit);
                }
                println!("wrote {} files", outcome.files.len());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
